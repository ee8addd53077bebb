#pragma once

#include <roadpainter/decoder.hpp>
#include <roadpainter/points_mask.hpp>
#include <roadpainter/sdmap.hpp>
#include <roadpainter/topology.hpp>

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

namespace roadpainter {

struct ModelWeights {
  SdInteractionWeights sd;
  DecoderWeights decoder;
  TopologyHeadWeights topology;
  ReadoutHeads readout;
};

// ---- base64 (RFC 4648, padded) ----

inline std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto v = (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i + 1])) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << 16;
    if (rest == 2) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i + 1])) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::string base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0 || (v[k] = value(c)) < 0) throw std::invalid_argument("base64: invalid character");
    }
    const std::uint32_t n = (static_cast<std::uint32_t>(v[0]) << 18) | (static_cast<std::uint32_t>(v[1]) << 12) |
                            (static_cast<std::uint32_t>(v[2]) << 6) | static_cast<std::uint32_t>(v[3]);
    out += static_cast<char>((n >> 16) & 0xFF);
    if (pad < 2) out += static_cast<char>((n >> 8) & 0xFF);
    if (pad < 1) out += static_cast<char>(n & 0xFF);
  }
  return out;
}

// ---- named tensors ----

// Calls f(name, data, rows, cols, is_matrix) for every learnable tensor in a
// fixed order. Vectors come through as rows x 1 with is_matrix false.
template <typename Weights, typename F>
void visit_tensors(Weights& w, F&& f) {
  auto mat = [&](const std::string& name, auto& m) { f(name, m.data(), m.rows(), m.cols(), true); };
  auto vec = [&](const std::string& name, auto& v) { f(name, v.data(), v.size(), Eigen::Index{1}, false); };
  auto ln = [&](const std::string& p, auto& l) {
    vec(p + ".gamma", l.gamma);
    vec(p + ".beta", l.beta);
  };
  auto mlp = [&](const std::string& p, auto& m) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      mat(p + "." + std::to_string(i) + ".weight", m.layers[i].weight);
      vec(p + "." + std::to_string(i) + ".bias", m.layers[i].bias);
    }
  };
  auto deform = [&](const std::string& p, auto& d) {
    mat(p + ".offset_w", d.offset_w);
    vec(p + ".offset_b", d.offset_b);
    mat(p + ".attn_w", d.attn_w);
    vec(p + ".attn_b", d.attn_b);
    mat(p + ".value_w", d.value_w);
    vec(p + ".value_b", d.value_b);
    mat(p + ".out_w", d.out_w);
    vec(p + ".out_b", d.out_b);
  };

  mat("sd.embeddings", w.sd.table.embeddings);
  for (std::size_t l = 0; l < w.sd.layers.size(); ++l) {
    const std::string p = "sd.layers." + std::to_string(l);
    auto& layer = w.sd.layers[l];
    ln(p + ".ln_self", layer.ln_self);
    deform(p + ".self_attn", layer.self_attn);
    ln(p + ".ln_cross", layer.ln_cross);
    deform(p + ".cross_attn", layer.cross_attn);
    ln(p + ".ln_ffn", layer.ln_ffn);
    mlp(p + ".ffn", layer.ffn);
  }
  auto& d = w.decoder;
  mat("decoder.queries.real", d.queries.real);
  mat("decoder.queries.virtual", d.queries.virt);
  mat("decoder.init_ref_logits", d.init_ref_logits);
  for (std::size_t l = 0; l < d.layers.size(); ++l) {
    const std::string p = "decoder.layers." + std::to_string(l);
    auto& layer = d.layers[l];
    ln(p + ".ln_masked", layer.ln_masked);
    deform(p + ".deform", layer.deform);
    ln(p + ".ln_deform", layer.ln_deform);
    ln(p + ".ln_self", layer.ln_self);
    mlp(p + ".ffn", layer.ffn);
    ln(p + ".ln_ffn", layer.ln_ffn);
  }
  mlp("decoder.points_head", d.points_head);
  mlp("decoder.score_head", d.score_head);
  mlp("decoder.mask_encoder.point_mlp", d.mask_encoder.point_mlp);
  mlp("decoder.mask_encoder.fuse_mlp", d.mask_encoder.fuse_mlp);
  mlp("decoder.mask_encoder.query_mlp", d.mask_encoder.query_mlp);
  mlp("topology.query_mlp", w.topology.query_mlp);
  mlp("topology.geometry_mlp", w.topology.geometry_mlp);
  mlp("topology.classifier", w.topology.classifier);
  mlp("readout.existence_columns", w.readout.existence_columns);
  mlp("readout.existence_rows", w.readout.existence_rows);
  mlp("readout.direction_columns", w.readout.direction_columns);
  mlp("readout.direction_rows", w.readout.direction_rows);
}

inline nlohmann::json weights_to_json(const ModelWeights& w) {
  nlohmann::json j;
  j["format"] = "roadpainter.weights";
  j["version"] = 1;
  j["tensors"] = nlohmann::json::array();
  visit_tensors(w, [&](const std::string& name, const double* data, Eigen::Index rows, Eigen::Index cols, bool is_matrix) {
    const auto bytes = std::string_view(reinterpret_cast<const char*>(data),
                                        sizeof(double) * static_cast<std::size_t>(rows * cols));
    nlohmann::json shape = is_matrix ? nlohmann::json{rows, cols} : nlohmann::json{rows};
    j["tensors"].push_back({{"name", name}, {"shape", shape}, {"dtype", "f64le"}, {"data", base64_encode(bytes)}});
  });
  return j;
}

// Fills `into` (already shaped for the target config) from JSON; every tensor
// must be present with a matching shape.
inline void weights_from_json(const nlohmann::json& j, ModelWeights& into) {
  if (j.value("format", std::string()) != "roadpainter.weights") throw std::invalid_argument("not a roadpainter weights file");
  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
  visit_tensors(into, [&](const std::string& name, double* data, Eigen::Index rows, Eigen::Index cols, bool is_matrix) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw std::invalid_argument("weights: missing tensor " + name);
    const auto& t = *it->second;
    if (t.at("dtype").get<std::string>() != "f64le") throw std::invalid_argument("weights: unsupported dtype for " + name);
    const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
    const bool ok = is_matrix ? (shape.size() == 2 && shape[0] == rows && shape[1] == cols)
                              : (shape.size() == 1 && shape[0] == rows);
    if (!ok) throw DimensionError("weights: shape mismatch for " + name);
    const std::string bytes = base64_decode(t.at("data").get<std::string>());
    if (bytes.size() != sizeof(double) * static_cast<std::size_t>(rows * cols)) {
      throw DimensionError("weights: payload size mismatch for " + name);
    }
    std::memcpy(data, bytes.data(), bytes.size());
  });
}

inline void save_weights(const ModelWeights& w, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << weights_to_json(w).dump() << '\n';
}

}  // namespace roadpainter
