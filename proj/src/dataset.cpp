#include "edgenet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "edgenet/error.hpp"

namespace edgenet {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) fail(ErrorCode::TruncatedFile, what);
  return (static_cast<uint32_t>(b[0]) << 24) |
         (static_cast<uint32_t>(b[1]) << 16) |
         (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

void write_be32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) fail(ErrorCode::IoError, "cannot open '" + images_path + "'");
  if (read_be32(img, "image magic") != kImageMagic)
    fail(ErrorCode::BadMagic, "'" + images_path + "' is not an image file");
  const uint32_t count = read_be32(img, "image count");
  const uint32_t rows = read_be32(img, "image rows");
  const uint32_t cols = read_be32(img, "image cols");
  if (rows == 0 || cols == 0)
    fail(ErrorCode::TruncatedFile, "zero image dimensions");

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) fail(ErrorCode::IoError, "cannot open '" + labels_path + "'");
  if (read_be32(lab, "label magic") != kLabelMagic)
    fail(ErrorCode::BadMagic, "'" + labels_path + "' is not a label file");
  const uint32_t label_count = read_be32(lab, "label count");
  if (label_count != count)
    fail(ErrorCode::CountMismatch,
         std::to_string(count) + " images vs " + std::to_string(label_count) +
             " labels");

  Dataset ds;
  ds.provenance = "idx:" + images_path;
  const size_t pixels = static_cast<size_t>(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  int max_label = 0;
  for (uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), pixels);
    if (!img)
      fail(ErrorCode::TruncatedFile,
           "image " + std::to_string(i) + " of " + std::to_string(count));
    Tensor t = Tensor::zeros_f32({1, 1, rows, cols});
    for (size_t p = 0; p < pixels; ++p)
      t.f32[p] = static_cast<float>(buf[p]) / 255.0f;
    ds.inputs.push_back(std::move(t));

    unsigned char l = 0;
    lab.read(reinterpret_cast<char*>(&l), 1);
    if (!lab)
      fail(ErrorCode::TruncatedFile,
           "label " + std::to_string(i) + " of " + std::to_string(count));
    ds.labels.push_back(static_cast<int>(l));
    max_label = std::max(max_label, static_cast<int>(l));
  }
  ds.num_classes = count == 0 ? 0 : max_label + 1;
  return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path) {
  if (ds.inputs.size() != ds.labels.size())
    fail(ErrorCode::CountMismatch, "inputs vs labels");
  uint32_t rows = 0, cols = 0;
  if (!ds.inputs.empty()) {
    const std::vector<int64_t>& s = ds.inputs[0].shape;
    if (s.size() != 4 || s[0] != 1 || s[1] != 1)
      fail(ErrorCode::ShapeMismatch,
           "idx files hold single-channel samples, got " + shape_to_string(s));
    rows = static_cast<uint32_t>(s[2]);
    cols = static_cast<uint32_t>(s[3]);
  }

  std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
  if (!img) fail(ErrorCode::IoError, "cannot write '" + images_path + "'");
  write_be32(img, kImageMagic);
  write_be32(img, static_cast<uint32_t>(ds.inputs.size()));
  write_be32(img, rows);
  write_be32(img, cols);
  for (const Tensor& t : ds.inputs) {
    if (t.shape != ds.inputs[0].shape)
      fail(ErrorCode::ShapeMismatch, "samples must share one shape");
    for (float v : t.f32) {
      const double q = std::floor(static_cast<double>(v) * 255.0 + 0.5);
      const unsigned char b =
          static_cast<unsigned char>(std::clamp(q, 0.0, 255.0));
      img.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
  if (!img) fail(ErrorCode::IoError, "short write to '" + images_path + "'");

  std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
  if (!lab) fail(ErrorCode::IoError, "cannot write '" + labels_path + "'");
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<uint32_t>(ds.labels.size()));
  for (int l : ds.labels) {
    if (l < 0 || l > 255)
      fail(ErrorCode::LabelOutOfRange, std::to_string(l));
    const unsigned char b = static_cast<unsigned char>(l);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!lab) fail(ErrorCode::IoError, "short write to '" + labels_path + "'");
}

Dataset load_csv(const std::string& path, const std::vector<int64_t>& shape) {
  if (shape.empty()) fail(ErrorCode::ShapeMismatch, "csv needs a sample shape");
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  const int64_t feat = shape_numel(shape);

  Dataset ds;
  ds.provenance = "csv:" + path;
  std::string line;
  size_t lineno = 0;
  int max_label = 0;
  std::vector<int64_t> full = {1};
  full.insert(full.end(), shape.begin(), shape.end());
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<float> values;
    while (std::getline(row, cell, ',')) {
      try {
        size_t used = 0;
        const float v = std::stof(cell, &used);
        while (used < cell.size() && std::isspace(
                   static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "line " + std::to_string(lineno) +
                                        ": bad cell '" + cell + "'");
      }
    }
    if (static_cast<int64_t>(values.size()) != feat + 1)
      fail(ErrorCode::LengthMismatch,
           "line " + std::to_string(lineno) + ": expected " +
               std::to_string(feat + 1) + " cells, got " +
               std::to_string(values.size()));
    const double lv = values[0];
    if (lv != std::floor(lv) || lv < 0)
      fail(ErrorCode::ParseError,
           "line " + std::to_string(lineno) + ": label must be a whole number");
    ds.labels.push_back(static_cast<int>(lv));
    max_label = std::max(max_label, static_cast<int>(lv));
    ds.inputs.push_back(
        Tensor::from_f32(full, {values.begin() + 1, values.end()}));
  }
  ds.num_classes = ds.labels.empty() ? 0 : max_label + 1;
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  if (ds.inputs.size() != ds.labels.size())
    fail(ErrorCode::CountMismatch, "inputs vs labels");
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  std::ostringstream os;
  os.precision(9);
  for (size_t i = 0; i < ds.inputs.size(); ++i) {
    os << ds.labels[i];
    for (float v : ds.inputs[i].f32) os << "," << v;
    os << "\n";
  }
  f << os.str();
  if (!f) fail(ErrorCode::IoError, "short write to '" + path + "'");
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes <= 0)
    fail(ErrorCode::LabelOutOfRange, "num_classes must be positive");
  if (spec.samples < 0) fail(ErrorCode::EmptyInput, "negative sample count");
  if (spec.shape.size() != 3)
    fail(ErrorCode::ShapeMismatch, "synthetic shape is (C, H, W)");
  const int64_t C = spec.shape[0], H = spec.shape[1], W = spec.shape[2];
  if (C <= 0 || H <= 0 || W <= 0)
    fail(ErrorCode::ShapeMismatch, "synthetic shape is (C, H, W)");

  std::mt19937 rng(static_cast<uint32_t>(spec.seed & 0xffffffffu));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> pick(0.0, 1.0);

  Dataset ds;
  ds.num_classes = spec.num_classes;
  {
    std::ostringstream os;
    os << "synthetic:classes=" << spec.num_classes << ",samples=" << spec.samples
       << ",shape=" << shape_to_string(spec.shape) << ",seed=" << spec.seed
       << ",sigma=" << spec.noise_sigma << ",hard=" << spec.hard_fraction
       << "@" << spec.hard_sigma;
    ds.provenance = os.str();
  }

  for (int i = 0; i < spec.samples; ++i) {
    const int c = i % spec.num_classes;
    const bool hard = pick(rng) < spec.hard_fraction;
    const double sigma = hard ? spec.hard_sigma : spec.noise_sigma;

    // Class mean: base 0.2, the class channel raised by 0.5, a class-specific
    // horizontal band raised by 0.3.
    const int64_t hot_c = c % C;
    const int64_t band0 = (static_cast<int64_t>(c) * H) / spec.num_classes;
    const int64_t band1 =
        (static_cast<int64_t>(c) + 1) * H / spec.num_classes;
    Tensor t = Tensor::zeros_f32({1, C, H, W});
    for (int64_t ch = 0; ch < C; ++ch)
      for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
          double mean = 0.2;
          if (ch == hot_c) mean += 0.5;
          if (y >= band0 && y < band1) mean += 0.3;
          const double v = mean + sigma * noise(rng);
          t.f32[(ch * H + y) * W + x] =
              static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    ds.inputs.push_back(std::move(t));
    ds.labels.push_back(c);
  }
  return ds;
}

}  // namespace edgenet
