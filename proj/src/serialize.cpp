#include "edgenet/serialize.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

namespace edgenet {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'D', 'G', 'E', 'N', 'E', 'T', 'M'};

// Little-endian scalar append. The build targets little-endian hosts; the
// explicit byte writes keep the on-disk layout fixed either way.
template <typename T>
void append_le(std::string& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

struct BlobWriter {
  std::string bytes;

  // 8-byte alignment between entries keeps offsets stable and readable.
  int64_t append(const void* data, size_t n) {
    while (bytes.size() % 8 != 0) bytes.push_back('\0');
    const int64_t off = static_cast<int64_t>(bytes.size());
    bytes.append(reinterpret_cast<const char*>(data), n);
    return off;
  }
};

json tensor_entry(const Tensor& t, BlobWriter& blob) {
  json e;
  e["shape"] = t.shape;
  e["dtype"] = dtype_name(t.dtype);
  if (t.dtype == DType::F32) {
    e["offset"] = blob.append(t.f32.data(), t.f32.size() * 4);
    e["bytes"] = t.f32.size() * 4;
  } else {
    e["offset"] = blob.append(t.u8.data(), t.u8.size());
    e["bytes"] = t.u8.size();
    e["scale"] = static_cast<double>(t.quant.scale);
    e["zero_point"] = t.quant.zero_point;
  }
  return e;
}

Tensor tensor_from_entry(const json& e, const std::string& blob) {
  Tensor t;
  t.shape = e.at("shape").get<std::vector<int64_t>>();
  t.dtype = dtype_from_name(e.at("dtype").get<std::string>());
  const size_t off = e.at("offset").get<size_t>();
  const size_t bytes = e.at("bytes").get<size_t>();
  if (off + bytes > blob.size())
    fail(ErrorCode::ChecksumMismatch, "blob entry out of range");
  if (t.dtype == DType::F32) {
    t.f32.resize(bytes / 4);
    std::memcpy(t.f32.data(), blob.data() + off, bytes);
  } else {
    t.u8.resize(bytes);
    std::memcpy(t.u8.data(), blob.data() + off, bytes);
    t.quant.scale = static_cast<float>(e.at("scale").get<double>());
    t.quant.zero_point = e.at("zero_point").get<int>();
  }
  check_tensor(t, "stored tensor");
  return t;
}

json attrs_to_json(const LayerAttrs& a) {
  return json{{"in_channels", a.in_channels},
              {"out_channels", a.out_channels},
              {"kernel_h", a.kernel_h},
              {"kernel_w", a.kernel_w},
              {"stride_h", a.stride_h},
              {"stride_w", a.stride_w},
              {"pad_h", a.pad_h},
              {"pad_w", a.pad_w}};
}

LayerAttrs attrs_from_json(const json& j) {
  LayerAttrs a;
  a.in_channels = j.at("in_channels").get<int>();
  a.out_channels = j.at("out_channels").get<int>();
  a.kernel_h = j.at("kernel_h").get<int>();
  a.kernel_w = j.at("kernel_w").get<int>();
  a.stride_h = j.at("stride_h").get<int>();
  a.stride_w = j.at("stride_w").get<int>();
  a.pad_h = j.at("pad_h").get<int>();
  a.pad_w = j.at("pad_w").get<int>();
  return a;
}

json qp_json(const QuantParams& qp) {
  return json{{"scale", static_cast<double>(qp.scale)},
              {"zero_point", qp.zero_point}};
}

QuantParams qp_from(const json& j) {
  QuantParams qp;
  qp.scale = static_cast<float>(j.at("scale").get<double>());
  qp.zero_point = j.at("zero_point").get<int>();
  return qp;
}

}  // namespace

std::string serialize_model(const Graph& g) {
  BlobWriter blob;
  json layers = json::array();
  for (const LayerSpec& l : g.layers) {
    json e;
    e["name"] = l.name;
    e["kind"] = layer_kind_name(l.kind);
    e["attrs"] = attrs_to_json(l.attrs);
    e["inputs"] = l.inputs;
    e["output"] = l.output;
    if (l.weight.has_value()) e["weight"] = tensor_entry(*l.weight, blob);
    if (l.bias.has_value()) e["bias"] = tensor_entry(*l.bias, blob);
    if (l.quant.has_value()) {
      const QuantizedLayerInfo& q = *l.quant;
      json qj;
      qj["mode"] = quant_mode_name(q.mode);
      // Pass-through layers carry no quantized weight; the key is omitted
      // rather than storing a zero-element tensor.
      if (q.weight_q.numel() > 0)
        qj["weight"] = tensor_entry(q.weight_q, blob);
      if (!q.bias_q.empty()) {
        json b;
        b["offset"] = blob.append(q.bias_q.data(), q.bias_q.size() * 4);
        b["bytes"] = q.bias_q.size() * 4;
        b["dtype"] = "i32";
        b["shape"] = json::array({static_cast<int64_t>(q.bias_q.size())});
        qj["bias_i32"] = b;
      }
      if (q.mode == QuantMode::PTQ) {
        qj["input_qp"] = qp_json(q.input_qp);
        qj["output_qp"] = qp_json(q.output_qp);
      }
      e["quant"] = qj;
    }
    layers.push_back(e);
  }

  json header;
  header["format_version"] = kModelFormatVersion;
  header["name"] = g.name;
  header["num_classes"] = g.num_classes;
  header["input"] = json{{"name", g.input.name}, {"shape", g.input.shape}};
  header["output"] = g.output;
  header["layers"] = layers;
  header["blob_size"] = blob.bytes.size();
  header["blob_crc32"] =
      static_cast<uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(
                                          blob.bytes.data()),
                                  static_cast<uInt>(blob.bytes.size())));

  const std::string head = header.dump();
  std::string out;
  out.reserve(8 + 4 + head.size() + blob.bytes.size());
  out.append(kMagic, 8);
  append_le<uint32_t>(out, static_cast<uint32_t>(head.size()));
  out += head;
  out += blob.bytes;
  return out;
}

Graph deserialize_model(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    fail(ErrorCode::FormatVersionMismatch, "not a model file");
  uint32_t head_len = 0;
  std::memcpy(&head_len, bytes.data() + 8, 4);
  if (12 + static_cast<size_t>(head_len) > bytes.size())
    fail(ErrorCode::ChecksumMismatch, "truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(12, head_len));
  } catch (const json::exception& e) {
    fail(ErrorCode::ChecksumMismatch,
         std::string("unreadable header: ") + e.what());
  }

  try {
    const int version = header.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      fail(ErrorCode::FormatVersionMismatch,
           "file version " + std::to_string(version) + ", reader supports " +
               std::to_string(kModelFormatVersion));

    const std::string blob = bytes.substr(12 + head_len);
    const size_t declared = header.at("blob_size").get<size_t>();
    if (blob.size() != declared)
      fail(ErrorCode::ChecksumMismatch,
           "blob holds " + std::to_string(blob.size()) + " bytes, header says " +
               std::to_string(declared));
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(blob.data()),
              static_cast<uInt>(blob.size())));
    if (crc != header.at("blob_crc32").get<uint32_t>())
      fail(ErrorCode::ChecksumMismatch, "blob checksum differs");

    Graph g;
    g.name = header.at("name").get<std::string>();
    g.num_classes = header.at("num_classes").get<int>();
    g.input.name = header.at("input").at("name").get<std::string>();
    g.input.shape = header.at("input").at("shape").get<std::vector<int64_t>>();
    g.output = header.at("output").get<std::string>();
    for (const json& e : header.at("layers")) {
      LayerSpec l;
      l.name = e.at("name").get<std::string>();
      l.kind = layer_kind_from_name(e.at("kind").get<std::string>());
      l.attrs = attrs_from_json(e.at("attrs"));
      l.inputs = e.at("inputs").get<std::vector<std::string>>();
      l.output = e.at("output").get<std::string>();
      if (e.contains("weight")) l.weight = tensor_from_entry(e["weight"], blob);
      if (e.contains("bias")) l.bias = tensor_from_entry(e["bias"], blob);
      if (e.contains("quant")) {
        const json& qj = e["quant"];
        QuantizedLayerInfo q;
        q.mode = quant_mode_from_name(qj.at("mode").get<std::string>());
        if (qj.contains("weight"))
          q.weight_q = tensor_from_entry(qj["weight"], blob);
        if (qj.contains("bias_i32")) {
          const json& b = qj["bias_i32"];
          const size_t off = b.at("offset").get<size_t>();
          const size_t n = b.at("bytes").get<size_t>() / 4;
          if (off + n * 4 > blob.size())
            fail(ErrorCode::ChecksumMismatch, "bias entry out of range");
          q.bias_q.resize(n);
          std::memcpy(q.bias_q.data(), blob.data() + off, n * 4);
        }
        if (q.mode == QuantMode::PTQ) {
          q.input_qp = qp_from(qj.at("input_qp"));
          q.output_qp = qp_from(qj.at("output_qp"));
        }
        l.quant = std::move(q);
      }
      g.layers.push_back(std::move(l));
    }
    validate(g);
    return g;
  } catch (const json::exception& e) {
    fail(ErrorCode::ChecksumMismatch,
         std::string("malformed header: ") + e.what());
  }
}

void save_model(const Graph& g, const std::string& path) {
  const std::string bytes = serialize_model(g);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::IoError, "short write to '" + path + "'");
}

Graph load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

bool graphs_equal(const Graph& a, const Graph& b) {
  return serialize_model(a) == serialize_model(b);
}

}  // namespace edgenet
