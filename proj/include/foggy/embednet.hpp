#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "foggy/error.hpp"
#include "foggy/numerics.hpp"
#include "foggy/rng.hpp"
#include "foggy/serialize.hpp"

namespace foggy {

/// Two-layer dense embedding network: W2 * tanh(W1 * x + b1) + b2.
/// Weights are drawn once from the seeded RNG with scale 1/sqrt(fan-in) and
/// quantized to f32 precision at construction, so the FGM1 round trip is
/// lossless and identical seeds give byte-identical files.
class EmbedNet {
 public:
  static constexpr int kDefaultHidden = 64;
  static constexpr int kDefaultDim = 128;

  static EmbedNet from_seed(std::uint64_t seed, int input_size,
                            int hidden = kDefaultHidden,
                            int dim = kDefaultDim) {
    if (input_size < 1 || hidden < 1 || dim < 2)
      throw ShapeError("EmbedNet: invalid layer widths");
    EmbedNet m;
    m.n0_ = input_size;
    m.n1_ = hidden;
    m.d_ = dim;
    m.seed_ = seed;
    SeededRng rng(seed, stream_id(streams::kModel, 0));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_size));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto draw = [&rng](std::vector<double>& w, std::size_t n, double scale) {
      w.resize(n);
      for (auto& x : w)
        x = static_cast<double>(static_cast<float>(rng.normal(0.0, scale)));
    };
    draw(m.w1_, static_cast<std::size_t>(hidden) * input_size, s1);
    draw(m.b1_, static_cast<std::size_t>(hidden), s1);
    draw(m.w2_, static_cast<std::size_t>(dim) * hidden, s2);
    draw(m.b2_, static_cast<std::size_t>(dim), s2);
    return m;
  }

  int input_size() const { return n0_; }
  int hidden_size() const { return n1_; }
  int dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }

  std::string id() const {
    std::ostringstream os;
    os << "m" << seed_ << "-" << n0_ << "x" << n1_ << "x" << d_;
    return os.str();
  }

  Embedding forward(const Image& x) const {
    check_shape(x);
    std::vector<double> h(n1_);
    hidden_activations(x.pixels, h);
    Embedding e(d_);
    output_from_hidden(h, e);
    return e;
  }

  struct LossGrad {
    double loss = 0.0;
    Grid grad;  // d(loss)/d(pixel), same shape as the input image
  };

  /// Loss distance(forward(x), target) and its exact input gradient via the
  /// chain rule through normalization, the linear layers, and tanh.
  LossGrad loss_and_input_gradient(const Image& x,
                                   const Embedding& target) const {
    check_shape(x);
    if (static_cast<int>(target.size()) != d_)
      throw ShapeError("loss_and_input_gradient: target dimension mismatch");

    std::vector<double> h(n1_);
    hidden_activations(x.pixels, h);
    Embedding e(d_);
    output_from_hidden(h, e);

    const double ne = l2_norm(e);
    if (!(ne >= kDegenerateNormEps))
      throw DegenerateVectorError(
          "loss_and_input_gradient: model produced a zero-norm embedding");
    const double nt = l2_norm(target);
    if (!(nt >= kDegenerateNormEps))
      throw DegenerateVectorError(
          "loss_and_input_gradient: zero-norm target");

    LossGrad out;
    out.loss = distance(e, target);

    // u = e/|e|, t = target/|target|, L = |u - t|^2:
    //   dL/de = (2/|e|) * ((u.t) u - t)
    std::vector<double> u(d_), t(d_);
    double dot = 0.0;
    for (int i = 0; i < d_; ++i) {
      u[i] = e[i] / ne;
      t[i] = target[i] / nt;
      dot += u[i] * t[i];
    }
    std::vector<double> ge(d_);
    for (int i = 0; i < d_; ++i) ge[i] = 2.0 * (dot * u[i] - t[i]) / ne;

    // back through W2, tanh, W1
    std::vector<double> gh(n1_, 0.0);
    for (int i = 0; i < d_; ++i) {
      const double* row = &w2_[static_cast<std::size_t>(i) * n1_];
      const double g = ge[i];
      for (int j = 0; j < n1_; ++j) gh[j] += row[j] * g;
    }
    for (int j = 0; j < n1_; ++j) gh[j] *= 1.0 - h[j] * h[j];

    out.grad = Grid::zeros(x.width, x.height, x.channels);
    for (int j = 0; j < n1_; ++j) {
      const double* row = &w1_[static_cast<std::size_t>(j) * n0_];
      const double g = gh[j];
      for (int i = 0; i < n0_; ++i) out.grad.values[i] += row[i] * g;
    }
    return out;
  }

  // FGM1: u32 n0, n1, d, u64 seed, then W1, b1, W2, b2 as LE f32.
  void save(std::ostream& os) const {
    detail::put_magic(os, "FGM1");
    detail::put_u32(os, static_cast<std::uint32_t>(n0_));
    detail::put_u32(os, static_cast<std::uint32_t>(n1_));
    detail::put_u32(os, static_cast<std::uint32_t>(d_));
    detail::put_u64(os, seed_);
    for (const auto* vec : {&w1_, &b1_, &w2_, &b2_})
      for (double w : *vec) detail::put_f32(os, static_cast<float>(w));
    if (!os) throw IoError("EmbedNet::save: stream failure");
  }

  static EmbedNet load(std::istream& is) {
    detail::expect_magic(is, "FGM1", "EmbedNet::load");
    EmbedNet m;
    m.n0_ = static_cast<int>(detail::get_u32(is));
    m.n1_ = static_cast<int>(detail::get_u32(is));
    m.d_ = static_cast<int>(detail::get_u32(is));
    m.seed_ = detail::get_u64(is);
    if (m.n0_ < 1 || m.n1_ < 1 || m.d_ < 2)
      throw IoError("EmbedNet::load: bad layer widths");
    auto read = [&is](std::vector<double>& w, std::size_t n) {
      w.resize(n);
      for (auto& x : w) x = static_cast<double>(detail::get_f32(is));
    };
    read(m.w1_, static_cast<std::size_t>(m.n1_) * m.n0_);
    read(m.b1_, static_cast<std::size_t>(m.n1_));
    read(m.w2_, static_cast<std::size_t>(m.d_) * m.n1_);
    read(m.b2_, static_cast<std::size_t>(m.d_));
    return m;
  }

  void save_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    save(f);
  }

  static EmbedNet load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    return load(f);
  }

  // test hook: zero all parameters
  void zero_parameters() {
    for (auto* vec : {&w1_, &b1_, &w2_, &b2_})
      for (auto& w : *vec) w = 0.0;
  }

 private:
  void check_shape(const Image& x) const {
    if (static_cast<int>(x.pixels.size()) != n0_)
      throw ShapeError("EmbedNet: image shape does not match model input");
  }

  void hidden_activations(const std::vector<double>& x,
                          std::vector<double>& h) const {
    for (int j = 0; j < n1_; ++j) {
      const double* row = &w1_[static_cast<std::size_t>(j) * n0_];
      double z = b1_[j];
      for (int i = 0; i < n0_; ++i) z += row[i] * x[i];
      h[j] = std::tanh(z);
    }
  }

  void output_from_hidden(const std::vector<double>& h, Embedding& e) const {
    for (int i = 0; i < d_; ++i) {
      const double* row = &w2_[static_cast<std::size_t>(i) * n1_];
      double z = b2_[i];
      for (int j = 0; j < n1_; ++j) z += row[j] * h[j];
      e[i] = z;
    }
  }

  int n0_ = 0, n1_ = 0, d_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> w1_, b1_, w2_, b2_;
};

/// Ordered, non-empty set of models with matching input size and dimension.
class ModelEnsemble {
 public:
  explicit ModelEnsemble(std::vector<EmbedNet> members)
      : members_(std::move(members)) {
    if (members_.empty()) throw ShapeError("ModelEnsemble: empty");
    for (const auto& m : members_)
      if (m.input_size() != members_.front().input_size() ||
          m.dim() != members_.front().dim())
        throw ShapeError("ModelEnsemble: member shapes disagree");
  }

  const std::vector<EmbedNet>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  int input_size() const { return members_.front().input_size(); }
  int dim() const { return members_.front().dim(); }

 private:
  std::vector<EmbedNet> members_;
};

/// Summed objective over ensemble members: sum_j D(f_j(x), target).
inline EmbedNet::LossGrad ensemble_loss_and_gradient(const ModelEnsemble& ens,
                                                     const Image& x,
                                                     const Embedding& target) {
  EmbedNet::LossGrad total;
  total.grad = Grid::zeros(x.width, x.height, x.channels);
  for (const auto& m : ens.members()) {
    const auto lg = m.loss_and_input_gradient(x, target);
    total.loss += lg.loss;
    for (std::size_t i = 0; i < total.grad.values.size(); ++i)
      total.grad.values[i] += lg.grad.values[i];
  }
  return total;
}

}  // namespace foggy
