#include "edgenet/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "edgenet/costs.hpp"
#include "edgenet/kernels.hpp"

namespace edgenet {

using nlohmann::json;

std::vector<double> l1_filter_importance(const Tensor& weight) {
  if (weight.dtype != DType::F32)
    fail(ErrorCode::ShapeMismatch, "importance needs an f32 weight");
  if (weight.shape.empty() || weight.numel() == 0)
    fail(ErrorCode::EmptyInput, "importance of empty weight");
  const int64_t filters = weight.shape[0];
  const int64_t per = weight.numel() / filters;
  std::vector<double> imp(static_cast<size_t>(filters), 0.0);
  for (int64_t f = 0; f < filters; ++f) {
    double s = 0.0;
    for (int64_t i = 0; i < per; ++i)
      s += std::abs(static_cast<double>(weight.f32[f * per + i]));
    imp[f] = s;
  }
  return imp;
}

int rounded_keep_count(int channels, double prune_ratio,
                       int channel_granularity) {
  if (channels <= 0 || channel_granularity <= 0)
    fail(ErrorCode::ParseError, "channels and granularity must be positive");
  if (prune_ratio < 0.0 || prune_ratio >= 1.0)
    fail(ErrorCode::ParseError, "prune_ratio must be in [0, 1)");
  const double groups =
      (1.0 - prune_ratio) * channels / channel_granularity;
  int kept = static_cast<int>(round_half_up(groups)) * channel_granularity;
  kept = std::max(kept, channel_granularity);
  kept = std::min(kept, channels);
  return kept;
}

namespace {

// Union-find over tensor names: one set per channel dimension that must be
// pruned consistently.
struct ChannelSpaces {
  std::map<std::string, std::string> parent;

  void add(const std::string& t) {
    if (!parent.count(t)) parent[t] = t;
  }
  std::string find(const std::string& t) {
    std::string r = t;
    while (parent.at(r) != r) r = parent.at(r);
    // path compression
    std::string c = t;
    while (parent.at(c) != r) {
      std::string next = parent.at(c);
      parent[c] = r;
      c = next;
    }
    return r;
  }
  void unite(const std::string& a, const std::string& b) {
    add(a);
    add(b);
    parent[find(a)] = find(b);
  }
};

bool kind_passes_channels(LayerKind k) {
  switch (k) {
    case LayerKind::BatchNormFolded:
    case LayerKind::ReLU:
    case LayerKind::ReLU6:
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
    case LayerKind::GlobalAvgPool:
    case LayerKind::Softmax:
    case LayerKind::DepthwiseConv2D:
      return true;
    default:
      return false;
  }
}

Tensor select_dim0(const Tensor& t, const std::vector<int>& keep) {
  Tensor out;
  out.shape = t.shape;
  out.shape[0] = static_cast<int64_t>(keep.size());
  out.dtype = t.dtype;
  const int64_t per = t.numel() / t.shape[0];
  out.f32.reserve(keep.size() * per);
  for (int idx : keep)
    out.f32.insert(out.f32.end(), t.f32.begin() + idx * per,
                   t.f32.begin() + (idx + 1) * per);
  return out;
}

Tensor select_dim1(const Tensor& t, const std::vector<int>& keep) {
  Tensor out;
  out.shape = t.shape;
  out.shape[1] = static_cast<int64_t>(keep.size());
  out.dtype = t.dtype;
  const int64_t d0 = t.shape[0];
  const int64_t d1 = t.shape[1];
  const int64_t per = t.numel() / (d0 * d1);
  out.f32.reserve(d0 * keep.size() * per);
  for (int64_t i = 0; i < d0; ++i)
    for (int idx : keep)
      out.f32.insert(out.f32.end(),
                     t.f32.begin() + (i * d1 + idx) * per,
                     t.f32.begin() + (i * d1 + idx + 1) * per);
  return out;
}

std::vector<int> top_k_by_importance(const std::vector<double>& imp, int k) {
  std::vector<int> order(imp.size());
  std::iota(order.begin(), order.end(), 0);
  // Equal importance keeps the lower filter index.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return imp[a] > imp[b];
  });
  order.resize(static_cast<size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

PruneResult prune_structured(const Graph& g, const PruneConfig& cfg) {
  validate(g);
  for (const LayerSpec& l : g.layers)
    if (l.quant.has_value())
      fail(ErrorCode::UnsupportedLayerKind,
           "structured pruning expects an f32 graph, layer '" + l.name +
               "' is quantized");
  if (cfg.prune_ratio < 0.0 || cfg.prune_ratio >= 1.0)
    fail(ErrorCode::ParseError, "prune_ratio must be in [0, 1)");
  if (cfg.channel_granularity <= 0)
    fail(ErrorCode::ParseError, "channel_granularity must be positive");

  PruneResult result;
  result.report.prune_ratio = cfg.prune_ratio;
  result.report.channel_granularity = cfg.channel_granularity;
  const int64_t params_before = count_macs(g).param_count;

  if (cfg.prune_ratio == 0.0) {
    result.graph = g;
    for (const LayerSpec& l : g.layers) {
      if (l.kind != LayerKind::Conv2D && l.kind != LayerKind::FullyConnected)
        continue;
      PruneLayerEntry e;
      e.layer = l.name;
      e.channels_before = e.channels_after =
          static_cast<int>(l.weight->shape[0]);
      result.report.layers.push_back(e);
    }
    result.report.params_before = result.report.params_after = params_before;
    result.report.compression_rate = 1.0;
    return result;
  }

  const auto shapes = infer_shapes(g);

  ChannelSpaces spaces;
  spaces.add(g.input.name);
  // Flatten output feature spaces map back to their source channel space.
  struct FlattenLink {
    std::string source;  // representative resolved later
    int64_t h = 1, w = 1;
  };
  std::map<std::string, FlattenLink> flatten_of;  // flatten output tensor

  for (const LayerSpec& l : g.layers) {
    spaces.add(l.output);
    for (const std::string& in : l.inputs) spaces.add(in);
    if (kind_passes_channels(l.kind)) {
      spaces.unite(l.inputs[0], l.output);
    } else if (l.kind == LayerKind::Add) {
      spaces.unite(l.inputs[0], l.inputs[1]);
      spaces.unite(l.inputs[0], l.output);
    } else if (l.kind == LayerKind::Flatten) {
      const auto& in_shape = shapes.at(l.inputs[0]);
      FlattenLink link;
      link.source = l.inputs[0];
      if (in_shape.size() == 4) {
        link.h = in_shape[2];
        link.w = in_shape[3];
      }
      flatten_of[l.output] = link;
    }
    // Conv2D / FullyConnected outputs start their own space.
  }

  // Spaces that must keep their channel count.
  std::set<std::string> protected_spaces;
  protected_spaces.insert(spaces.find(g.input.name));
  protected_spaces.insert(spaces.find(g.output));
  if (cfg.protect_residual_io) {
    for (const LayerSpec& l : g.layers)
      if (l.kind == LayerKind::Add)
        protected_spaces.insert(spaces.find(l.output));
  }
  // Keep sets per space, decided by the producing Conv2D/FC layers.
  std::map<std::string, std::vector<int>> keep_by_space;
  std::map<std::string, std::string> keep_owner;  // producing layer

  for (const LayerSpec& l : g.layers) {
    if (l.kind != LayerKind::Conv2D && l.kind != LayerKind::FullyConnected)
      continue;
    const std::string space = spaces.find(l.output);
    if (protected_spaces.count(space)) continue;
    const int channels = static_cast<int>(l.weight->shape[0]);
    const int kept = rounded_keep_count(channels, cfg.prune_ratio,
                                        cfg.channel_granularity);
    std::vector<int> keep =
        top_k_by_importance(l1_filter_importance(*l.weight), kept);
    auto it = keep_by_space.find(space);
    if (it == keep_by_space.end()) {
      keep_by_space[space] = keep;
      keep_owner[space] = l.name;
    } else if (it->second != keep) {
      fail(ErrorCode::GraphRewriteConflict,
           "layers '" + keep_owner[space] + "' and '" + l.name +
               "' share a channel set but select different filters");
    }
  }

  // Keep set for a consumed tensor, expanded through flatten if needed.
  auto input_keep = [&](const std::string& tensor)
      -> std::optional<std::vector<int>> {
    auto fl = flatten_of.find(tensor);
    if (fl != flatten_of.end()) {
      const std::string src_space = spaces.find(fl->second.source);
      auto it = keep_by_space.find(src_space);
      if (it == keep_by_space.end()) return std::nullopt;
      std::vector<int> feats;
      const int64_t hw = fl->second.h * fl->second.w;
      feats.reserve(it->second.size() * hw);
      for (int c : it->second)
        for (int64_t i = 0; i < hw; ++i)
          feats.push_back(static_cast<int>(c * hw + i));
      return feats;
    }
    auto it = keep_by_space.find(spaces.find(tensor));
    if (it == keep_by_space.end()) return std::nullopt;
    return it->second;
  };

  Graph out = g;
  for (LayerSpec& l : out.layers) {
    switch (l.kind) {
      case LayerKind::Conv2D:
      case LayerKind::FullyConnected: {
        auto ik = input_keep(l.inputs[0]);
        if (ik.has_value()) {
          l.weight = select_dim1(*l.weight, *ik);
          l.attrs.in_channels = static_cast<int>(ik->size());
        }
        auto ok = keep_by_space.find(spaces.find(l.output));
        if (ok != keep_by_space.end()) {
          l.weight = select_dim0(*l.weight, ok->second);
          if (l.bias.has_value()) l.bias = select_dim0(*l.bias, ok->second);
          l.attrs.out_channels = static_cast<int>(ok->second.size());
        }
        break;
      }
      case LayerKind::DepthwiseConv2D: {
        auto ik = input_keep(l.inputs[0]);
        if (ik.has_value()) {
          l.weight = select_dim0(*l.weight, *ik);
          if (l.bias.has_value()) l.bias = select_dim0(*l.bias, *ik);
          l.attrs.in_channels = l.attrs.out_channels =
              static_cast<int>(ik->size());
        }
        break;
      }
      case LayerKind::BatchNormFolded: {
        auto ik = input_keep(l.inputs[0]);
        if (ik.has_value()) {
          l.weight = select_dim0(*l.weight, *ik);
          l.bias = select_dim0(*l.bias, *ik);
        }
        break;
      }
      default:
        break;
    }
  }

  validate(out);

  for (const LayerSpec& l : g.layers) {
    if (l.kind != LayerKind::Conv2D && l.kind != LayerKind::FullyConnected)
      continue;
    PruneLayerEntry e;
    e.layer = l.name;
    e.channels_before = static_cast<int>(l.weight->shape[0]);
    auto it = keep_by_space.find(spaces.find(l.output));
    if (it == keep_by_space.end()) {
      e.channels_after = e.channels_before;
    } else {
      e.channels_after = static_cast<int>(it->second.size());
      std::vector<bool> kept(e.channels_before, false);
      for (int k : it->second) kept[k] = true;
      for (int i = 0; i < e.channels_before; ++i)
        if (!kept[i]) e.removed.push_back(i);
    }
    result.report.layers.push_back(e);
  }

  result.graph = std::move(out);
  result.report.params_before = params_before;
  result.report.params_after = count_macs(result.graph).param_count;
  result.report.compression_rate =
      static_cast<double>(params_before) /
      static_cast<double>(result.report.params_after);
  return result;
}

UnstructuredResult prune_unstructured_mask(const Graph& g,
                                           double prune_ratio) {
  validate(g);
  if (prune_ratio < 0.0 || prune_ratio > 1.0)
    fail(ErrorCode::ParseError, "prune_ratio must be in [0, 1]");
  UnstructuredResult res;
  res.graph = g;

  std::vector<float*> slots;
  for (LayerSpec& l : res.graph.layers) {
    if (l.kind != LayerKind::Conv2D && l.kind != LayerKind::DepthwiseConv2D &&
        l.kind != LayerKind::FullyConnected)
      continue;
    if (!l.weight.has_value())
      fail(ErrorCode::MissingWeight, "layer '" + l.name + "'");
    for (float& w : l.weight->f32) slots.push_back(&w);
  }
  if (slots.empty()) {
    res.sparsity = 0.0;
    return res;
  }

  const size_t n = slots.size();
  const auto k = static_cast<size_t>(
      round_half_up(prune_ratio * static_cast<double>(n)));
  if (k > 0) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    // Ties at equal magnitude zero the lower global index first.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return std::abs(*slots[a]) < std::abs(*slots[b]);
    });
    for (size_t i = 0; i < std::min(k, n); ++i) *slots[order[i]] = 0.0f;
  }

  size_t zeros = 0;
  for (float* w : slots)
    if (*w == 0.0f) ++zeros;
  res.sparsity = static_cast<double>(zeros) / static_cast<double>(n);
  return res;
}

std::string PruneReport::to_json() const {
  json j;
  j["format_version"] = 1;
  j["prune_ratio"] = prune_ratio;
  j["channel_granularity"] = channel_granularity;
  json ls = json::array();
  for (const PruneLayerEntry& e : layers) {
    ls.push_back(json{{"layer", e.layer},
                      {"channels_before", e.channels_before},
                      {"channels_after", e.channels_after},
                      {"removed", e.removed}});
  }
  j["layers"] = ls;
  j["params_before"] = params_before;
  j["params_after"] = params_after;
  j["compression_rate"] = compression_rate;
  return j.dump(2) + "\n";
}

PruneReport PruneReport::from_json(const std::string& text) {
  PruneReport r;
  try {
    const json j = json::parse(text);
    r.prune_ratio = j.at("prune_ratio").get<double>();
    r.channel_granularity = j.at("channel_granularity").get<int>();
    for (const json& e : j.at("layers")) {
      PruneLayerEntry le;
      le.layer = e.at("layer").get<std::string>();
      le.channels_before = e.at("channels_before").get<int>();
      le.channels_after = e.at("channels_after").get<int>();
      le.removed = e.at("removed").get<std::vector<int>>();
      r.layers.push_back(le);
    }
    r.params_before = j.at("params_before").get<int64_t>();
    r.params_after = j.at("params_after").get<int64_t>();
    r.compression_rate = j.at("compression_rate").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("prune report: ") + e.what());
  }
  return r;
}

}  // namespace edgenet
