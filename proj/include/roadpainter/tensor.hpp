#pragma once

#include <roadpainter/core.hpp>
#include <roadpainter/geometry.hpp>

#include <functional>
#include <span>
#include <vector>

namespace roadpainter {

// Cell (row, col) <-> metric (x, y). Columns run along x (driving direction),
// rows along y; integer grid coordinates address cell centers.
struct GridSpec {
  int rows = 100;
  int cols = 200;
  double resolution = 0.5;  // meters per cell
  double x_min = kXMin;
  double y_min = kYMin;

  int cells() const { return rows * cols; }

  Point2 cell_center(double row, double col) const {
    return {x_min + (col + 0.5) * resolution, y_min + (row + 0.5) * resolution};
  }

  double col_of_x(double x) const { return (x - x_min) / resolution - 0.5; }
  double row_of_y(double y) const { return (y - y_min) / resolution - 0.5; }

  // fractional (row, col)
  Eigen::Vector2d to_grid(const Point2& xy) const { return {row_of_y(xy.y()), col_of_x(xy.x())}; }

  bool valid() const { return rows > 0 && cols > 0 && resolution > 0.0; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// H x W x C feature map stored as an (H*W) x C matrix, cell index row*W + col.
class BevGrid {
 public:
  BevGrid() = default;

  BevGrid(const GridSpec& spec, int channels)
      : spec_(spec), channels_(channels), data_(Matrix::Zero(spec.cells(), channels)) {
    if (!spec.valid() || channels <= 0) throw DimensionError("BevGrid: invalid shape");
  }

  BevGrid(const GridSpec& spec, Matrix data) : spec_(spec), channels_(static_cast<int>(data.cols())), data_(std::move(data)) {
    require_dims(data_.rows() == spec_.cells(), "BevGrid: data rows != H*W");
  }

  const GridSpec& spec() const { return spec_; }
  int height() const { return spec_.rows; }
  int width() const { return spec_.cols; }
  int channels() const { return channels_; }

  const Matrix& data() const { return data_; }
  Matrix& data() { return data_; }

  int index(int row, int col) const { return row * spec_.cols + col; }

  auto cell(int row, int col) { return data_.row(index(row, col)); }
  auto cell(int row, int col) const { return data_.row(index(row, col)); }

  double& at(int row, int col, int ch) { return data_(index(row, col), ch); }
  double at(int row, int col, int ch) const { return data_(index(row, col), ch); }

  bool same_shape(const BevGrid& o) const {
    return spec_.rows == o.spec_.rows && spec_.cols == o.spec_.cols && channels_ == o.channels_;
  }

 private:
  GridSpec spec_;
  int channels_ = 0;
  Matrix data_;
};

class FullyMaskedError : public std::domain_error {
 public:
  FullyMaskedError() : std::domain_error("softmax: every entry is -inf (fully masked row)") {}
};

// Max-subtracted softmax; -inf entries map to exactly 0.
inline Vector softmax(const Vector& v) {
  const double mx = v.maxCoeff();
  if (mx == kNegInf) throw FullyMaskedError();
  Vector out(v.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = v[i] == kNegInf ? 0.0 : std::exp(v[i] - mx);
    sum += out[i];
  }
  return out / sum;
}

inline void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Vector row = m.row(r).transpose();
    m.row(r) = softmax(row).transpose();
  }
}

enum class Activation { kNone, kRelu };

struct MlpLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kNone;
};

struct MlpWeights {
  std::vector<MlpLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

  void check() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      require_dims(layers[i].bias.size() == layers[i].weight.rows(), "MLP: bias/weight mismatch");
      if (i > 0) require_dims(layers[i].weight.cols() == layers[i - 1].weight.rows(), "MLP: layer dims do not chain");
    }
  }

  // dims = {in, hidden..., out}; relu between layers, none on the output
  static MlpWeights zeros(std::span<const int> dims) {
    MlpWeights w;
    for (std::size_t i = 1; i < dims.size(); ++i) {
      w.layers.push_back({Matrix::Zero(dims[i], dims[i - 1]), Vector::Zero(dims[i]),
                          i + 1 < dims.size() ? Activation::kRelu : Activation::kNone});
    }
    return w;
  }

  static MlpWeights zeros(std::initializer_list<int> dims) {
    return zeros(std::span<const int>(dims.begin(), dims.size()));
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static MlpWeights random(std::span<const int> dims, Rng& rng) {
    auto w = zeros(dims);
    for (auto& layer : w.layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = rng.uniform(-bound, bound);
    }
    return w;
  }

  static MlpWeights random(std::initializer_list<int> dims, Rng& rng) {
    return random(std::span<const int>(dims.begin(), dims.size()), rng);
  }
};

inline Vector mlp_forward(const MlpWeights& w, const Vector& x) {
  require_dims(!w.layers.empty(), "mlp_forward: empty MLP");
  require_dims(x.size() == w.input_dim(), "mlp_forward: input dimension mismatch");
  Vector h = x;
  for (const auto& layer : w.layers) {
    require_dims(layer.weight.cols() == h.size(), "mlp_forward: layer dimension mismatch");
    h = layer.weight * h + layer.bias;
    if (layer.activation == Activation::kRelu) h = h.cwiseMax(0.0);
  }
  return h;
}

// Row-batched forward: X is N x in, result N x out.
inline Matrix mlp_forward_rows(const MlpWeights& w, const Matrix& x) {
  require_dims(!w.layers.empty(), "mlp_forward_rows: empty MLP");
  require_dims(x.cols() == w.input_dim(), "mlp_forward_rows: input dimension mismatch");
  Matrix h = x;
  for (const auto& layer : w.layers) {
    require_dims(layer.weight.cols() == h.cols(), "mlp_forward_rows: layer dimension mismatch");
    Matrix next = h * layer.weight.transpose();
    next.rowwise() += layer.bias.transpose();
    if (layer.activation == Activation::kRelu) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

struct LayerNorm {
  Vector gamma;
  Vector beta;
  double eps = 1e-5;

  static LayerNorm identity(int dim) { return {Vector::Ones(dim), Vector::Zero(dim), 1e-5}; }
};

inline Matrix layer_norm_rows(const Matrix& x, const LayerNorm& ln) {
  require_dims(ln.gamma.size() == x.cols() && ln.beta.size() == x.cols(), "layer_norm: dim mismatch");
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / n;
    const double var = (x.row(r).array() - mean).square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + ln.eps);
    out.row(r) = ((x.row(r).array() - mean) * inv * ln.gamma.transpose().array() + ln.beta.transpose().array()).matrix();
  }
  return out;
}

// Bilinear interpolation over channels [ch_begin, ch_begin + out.size()).
// Locations outside [0, H-1] x [0, W-1] yield zeros.
inline void bilinear_sample_into(const BevGrid& g, double row, double col, int ch_begin, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const int h = g.height();
  const int w = g.width();
  if (!(row >= 0.0 && row <= h - 1 && col >= 0.0 && col <= w - 1)) return;
  const int r0 = static_cast<int>(std::floor(row));
  const int c0 = static_cast<int>(std::floor(col));
  const int r1 = std::min(r0 + 1, h - 1);
  const int c1 = std::min(c0 + 1, w - 1);
  const double fr = row - r0;
  const double fc = col - c0;
  const double w00 = (1.0 - fr) * (1.0 - fc);
  const double w01 = (1.0 - fr) * fc;
  const double w10 = fr * (1.0 - fc);
  const double w11 = fr * fc;
  const auto& d = g.data();
  const int i00 = g.index(r0, c0), i01 = g.index(r0, c1), i10 = g.index(r1, c0), i11 = g.index(r1, c1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const int ch = ch_begin + static_cast<int>(k);
    out[k] = w00 * d(i00, ch) + w01 * d(i01, ch) + w10 * d(i10, ch) + w11 * d(i11, ch);
  }
}

inline Vector bilinear_sample(const BevGrid& g, double row, double col) {
  Vector out(g.channels());
  bilinear_sample_into(g, row, col, 0, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

// Layout: channels [0, C/2) encode the column (x), [C/2, C) the row (y).
// Within each half, pairs (sin, cos) at frequencies 10000^(-2i/(C/2)) of the
// position normalized to [0, 2*pi).
inline BevGrid sinusoidal_pe_2d(const GridSpec& spec, int channels) {
  if (channels <= 0 || channels % 4 != 0) throw DimensionError("sinusoidal_pe_2d: C must be a positive multiple of 4");
  BevGrid pe(spec, channels);
  const int half = channels / 2;
  const int quarter = channels / 4;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int r = 0; r < spec.rows; ++r) {
    const double yn = two_pi * r / spec.rows;
    for (int c = 0; c < spec.cols; ++c) {
      const double xn = two_pi * c / spec.cols;
      auto cell = pe.cell(r, c);
      for (int i = 0; i < quarter; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / half);
        cell(2 * i) = std::sin(xn * freq);
        cell(2 * i + 1) = std::cos(xn * freq);
        cell(half + 2 * i) = std::sin(yn * freq);
        cell(half + 2 * i + 1) = std::cos(yn * freq);
      }
    }
  }
  return pe;
}

inline BevGrid sinusoidal_pe_2d(int height, int width, int channels) {
  GridSpec spec;
  spec.rows = height;
  spec.cols = width;
  return sinusoidal_pe_2d(spec, channels);
}

using ScalarFn = std::function<double(const Vector&)>;

// Central differences per coordinate.
inline Vector finite_diff_grad(const ScalarFn& f, const Vector& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be > 0");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

}  // namespace roadpainter
