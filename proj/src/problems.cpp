#include "momentum/problems.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace momentum {

Vector Problem::hessian_vec(const Vector&, const Vector&) const {
  throw Error("problem '" + name() + "' has no Hessian-vector product");
}

std::optional<LipschitzBounds> Problem::analytic_lipschitz(const Vector&, double) const {
  return std::nullopt;
}

void Problem::check_dim(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    std::ostringstream os;
    os << name() << ": expected vector of length " << dim() << ", got " << x.size();
    throw DimensionError(os.str());
  }
}

Vector pack_factors(const Matrix& X, const Matrix& Y) {
  if (X.cols() != Y.cols()) throw DimensionError("pack_factors: X and Y ranks differ");
  Vector x(X.size() + Y.size());
  x.head(X.size()) = Eigen::Map<const Vector>(X.data(), X.size());
  x.tail(Y.size()) = Eigen::Map<const Vector>(Y.data(), Y.size());
  return x;
}

std::pair<Matrix, Matrix> unpack_factors(const Vector& x, int m, int n, int r) {
  if (x.size() != static_cast<Eigen::Index>(m + n) * r) {
    throw DimensionError("unpack_factors: vector length does not match (m + n) * r");
  }
  Matrix X = Eigen::Map<const Matrix>(x.data(), m, r);
  Matrix Y = Eigen::Map<const Matrix>(x.data() + static_cast<Eigen::Index>(m) * r, n, r);
  return {std::move(X), std::move(Y)};
}

Vector pack_layers(const std::vector<Matrix>& layers) {
  Eigen::Index total = 0;
  for (const auto& W : layers) total += W.size();
  Vector x(total);
  Eigen::Index offset = 0;
  for (const auto& W : layers) {
    x.segment(offset, W.size()) = Eigen::Map<const Vector>(W.data(), W.size());
    offset += W.size();
  }
  return x;
}

std::vector<Matrix> unpack_layers(const Vector& x, const std::vector<int>& widths) {
  std::vector<Matrix> layers;
  Eigen::Index offset = 0;
  for (std::size_t j = 1; j < widths.size(); ++j) {
    const Eigen::Index rows = widths[j];
    const Eigen::Index cols = widths[j - 1];
    if (offset + rows * cols > x.size()) throw DimensionError("unpack_layers: vector too short");
    layers.emplace_back(Eigen::Map<const Matrix>(x.data() + offset, rows, cols));
    offset += rows * cols;
  }
  if (offset != x.size()) throw DimensionError("unpack_layers: vector too long");
  return layers;
}

namespace {

// ---------------------------------------------------------------------------
// Fixtures

class Quadratic final : public Problem {
 public:
  explicit Quadratic(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "quadratic"; }
  double value(const Vector& x) const override {
    check_dim(x);
    return 0.5 * x.squaredNorm();
  }
  Vector gradient(const Vector& x) const override {
    check_dim(x);
    return x;
  }
  bool has_hessian_vec() const override { return true; }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    check_dim(x);
    check_dim(v);
    return v;
  }
  double suggested_box() const override { return 1.0; }
  std::optional<LipschitzBounds> analytic_lipschitz(const Vector& center,
                                                    double radius) const override {
    return LipschitzBounds{center.norm() + radius, 1.0, radius};
  }

 private:
  std::size_t dim_;
};

class IndefiniteQuadratic final : public Problem {
 public:
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "indefinite_quadratic"; }
  double value(const Vector& x) const override {
    check_dim(x);
    return 0.5 * (x[0] * x[0] - x[1] * x[1]);
  }
  Vector gradient(const Vector& x) const override {
    check_dim(x);
    return Vector{{x[0], -x[1]}};
  }
  bool has_hessian_vec() const override { return true; }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    check_dim(x);
    check_dim(v);
    return Vector{{v[0], -v[1]}};
  }
  double suggested_box() const override { return 1.0; }
  std::optional<LipschitzBounds> analytic_lipschitz(const Vector& center,
                                                    double radius) const override {
    return LipschitzBounds{center.norm() + radius, 1.0, radius};
  }
};

class Quartic final : public Problem {
 public:
  explicit Quartic(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "quartic"; }
  double value(const Vector& x) const override {
    check_dim(x);
    return x.array().square().square().sum();
  }
  Vector gradient(const Vector& x) const override {
    check_dim(x);
    return 4.0 * x.array().cube();
  }
  bool has_hessian_vec() const override { return true; }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    check_dim(x);
    check_dim(v);
    return 12.0 * x.array().square() * v.array();
  }
  double suggested_box() const override { return 1.0; }
  // Every coordinate on the ball is bounded by max_i |c_i| + radius, which
  // bounds the diagonal Hessian 12 x_i^2; ||x||_3 <= ||x||_2 bounds the gradient.
  std::optional<LipschitzBounds> analytic_lipschitz(const Vector& center,
                                                    double radius) const override {
    const double coord = center.cwiseAbs().maxCoeff() + radius;
    const double rho = center.norm() + radius;
    return LipschitzBounds{4.0 * rho * rho * rho, 12.0 * coord * coord, radius};
  }

 private:
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Matrix factorization

class MatrixFactorization final : public Problem {
 public:
  MatrixFactorization(Matrix target, int rank)
      : target_(std::move(target)), m_(static_cast<int>(target_.rows())),
        n_(static_cast<int>(target_.cols())), r_(rank) {}

  std::size_t dim() const override { return static_cast<std::size_t>(m_ + n_) * r_; }
  std::string name() const override { return "matrix_factorization"; }

  double value(const Vector& x) const override {
    check_dim(x);
    const auto [X, Y] = unpack_factors(x, m_, n_, r_);
    return (X * Y.transpose() - target_).squaredNorm();
  }

  Vector gradient(const Vector& x) const override {
    check_dim(x);
    const auto [X, Y] = unpack_factors(x, m_, n_, r_);
    const Matrix R = X * Y.transpose() - target_;
    return pack_factors(2.0 * R * Y, 2.0 * R.transpose() * X);
  }

  bool has_hessian_vec() const override { return true; }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    check_dim(x);
    check_dim(v);
    const auto [X, Y] = unpack_factors(x, m_, n_, r_);
    const auto [dX, dY] = unpack_factors(v, m_, n_, r_);
    const Matrix R = X * Y.transpose() - target_;
    const Matrix dR = dX * Y.transpose() + X * dY.transpose();
    return pack_factors(2.0 * (dR * Y + R * dY), 2.0 * (dR.transpose() * X + R.transpose() * dX));
  }

  double suggested_box() const override {
    return 1.0 + std::sqrt(2.0 * std::sqrt(static_cast<double>(r_)) * target_.norm());
  }

  // With rho >= ||(X, Y)||_F on the ball:
  //   ||grad|| <= 2 ||R||_F rho,  ||R||_F <= rho^2 / 2 + ||M||_F
  //   ||H v||  <= 2 (||dR|| (||X|| + ||Y||) + ||R|| (||dX|| + ||dY||)) <= 2 sqrt(2) (1.5 rho^2 + ||M||_F) ||v||
  std::optional<LipschitzBounds> analytic_lipschitz(const Vector& center,
                                                    double radius) const override {
    const double rho = center.norm() + radius;
    const double residual = 0.5 * rho * rho + target_.norm();
    return LipschitzBounds{2.0 * residual * rho,
                           2.0 * std::sqrt(2.0) * (1.5 * rho * rho + target_.norm()), radius};
  }

 private:
  Matrix target_;
  int m_, n_, r_;
};

// ---------------------------------------------------------------------------
// Matrix sensing

class MatrixSensing final : public Problem {
 public:
  MatrixSensing(std::vector<Matrix> sensing, Vector measurements, int rank)
      : sensing_(std::move(sensing)), b_(std::move(measurements)),
        m_(static_cast<int>(sensing_.front().rows())),
        n_(static_cast<int>(sensing_.front().cols())), r_(rank) {}

  std::size_t dim() const override { return static_cast<std::size_t>(m_ + n_) * r_; }
  std::string name() const override { return "matrix_sensing"; }

  double value(const Vector& x) const override {
    check_dim(x);
    const auto [X, Y] = unpack_factors(x, m_, n_, r_);
    return residuals(X * Y.transpose()).squaredNorm();
  }

  Vector gradient(const Vector& x) const override {
    check_dim(x);
    const auto [X, Y] = unpack_factors(x, m_, n_, r_);
    const Matrix G = weighted_sum(residuals(X * Y.transpose()));
    return pack_factors(2.0 * G * Y, 2.0 * G.transpose() * X);
  }

  bool has_hessian_vec() const override { return true; }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    check_dim(x);
    check_dim(v);
    const auto [X, Y] = unpack_factors(x, m_, n_, r_);
    const auto [dX, dY] = unpack_factors(v, m_, n_, r_);
    const Matrix G = weighted_sum(residuals(X * Y.transpose()));
    const Matrix dP = dX * Y.transpose() + X * dY.transpose();
    Vector dr(static_cast<Eigen::Index>(sensing_.size()));
    for (std::size_t i = 0; i < sensing_.size(); ++i) {
      dr[static_cast<Eigen::Index>(i)] = sensing_[i].cwiseProduct(dP).sum();
    }
    const Matrix dG = weighted_sum(dr);
    return pack_factors(2.0 * (dG * Y + G * dY), 2.0 * (dG.transpose() * X + G.transpose() * dX));
  }

  double suggested_box() const override { return 1.0 + std::sqrt(2.0 * b_.norm()); }

 private:
  Vector residuals(const Matrix& P) const {
    Vector r(b_.size());
    for (std::size_t i = 0; i < sensing_.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      r[k] = sensing_[i].cwiseProduct(P).sum() - b_[k];
    }
    return r;
  }

  Matrix weighted_sum(const Vector& w) const {
    Matrix G = Matrix::Zero(m_, n_);
    for (std::size_t i = 0; i < sensing_.size(); ++i) {
      G += w[static_cast<Eigen::Index>(i)] * sensing_[i];
    }
    return G;
  }

  std::vector<Matrix> sensing_;
  Vector b_;
  int m_, n_, r_;
};

// ---------------------------------------------------------------------------
// Deep linear network

class LinearNetwork final : public Problem {
 public:
  LinearNetwork(Matrix inputs, Matrix targets, std::vector<int> widths)
      : inputs_(std::move(inputs)), targets_(std::move(targets)), widths_(std::move(widths)) {
    dim_ = 0;
    for (std::size_t j = 1; j < widths_.size(); ++j) {
      dim_ += static_cast<std::size_t>(widths_[j]) * static_cast<std::size_t>(widths_[j - 1]);
    }
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "linear_network"; }

  double value(const Vector& x) const override {
    check_dim(x);
    const auto W = unpack_layers(x, widths_);
    Matrix A = inputs_;
    for (const auto& Wj : W) A = Wj * A;
    return (A - targets_).squaredNorm();
  }

  Vector gradient(const Vector& x) const override {
    check_dim(x);
    const auto W = unpack_layers(x, widths_);
    const auto acts = forward(W);
    Matrix G = 2.0 * (acts.back() - targets_);
    std::vector<Matrix> grads(W.size());
    for (std::size_t j = W.size(); j-- > 0;) {
      grads[j] = G * acts[j].transpose();
      G = W[j].transpose() * G;
    }
    return pack_layers(grads);
  }

  bool has_hessian_vec() const override { return true; }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    check_dim(x);
    check_dim(v);
    const auto W = unpack_layers(x, widths_);
    const auto dW = unpack_layers(v, widths_);
    const auto acts = forward(W);
    // Forward-mode derivative of the activations.
    std::vector<Matrix> dacts(acts.size());
    dacts[0] = Matrix::Zero(inputs_.rows(), inputs_.cols());
    for (std::size_t j = 0; j < W.size(); ++j) {
      dacts[j + 1] = dW[j] * acts[j] + W[j] * dacts[j];
    }
    Matrix G = 2.0 * (acts.back() - targets_);
    Matrix dG = 2.0 * dacts.back();
    std::vector<Matrix> dgrads(W.size());
    for (std::size_t j = W.size(); j-- > 0;) {
      dgrads[j] = dG * acts[j].transpose() + G * dacts[j].transpose();
      dG = dW[j].transpose() * G + W[j].transpose() * dG;
      G = W[j].transpose() * G;
    }
    return pack_layers(dgrads);
  }

  double suggested_box() const override {
    const double layers = static_cast<double>(widths_.size() - 1);
    const double scale = targets_.norm() / std::max(inputs_.norm(), 1e-12);
    return 1.0 + std::sqrt(layers) * std::pow(scale, 1.0 / layers);
  }

 private:
  std::vector<Matrix> forward(const std::vector<Matrix>& W) const {
    std::vector<Matrix> acts;
    acts.reserve(W.size() + 1);
    acts.push_back(inputs_);
    for (const auto& Wj : W) acts.push_back(Wj * acts.back());
    return acts;
  }

  Matrix inputs_;
  Matrix targets_;
  std::vector<int> widths_;
  std::size_t dim_;
};

class Shifted final : public Problem {
 public:
  Shifted(ProblemPtr base, double offset) : base_(std::move(base)), offset_(offset) {}
  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name() + "+const"; }
  double value(const Vector& x) const override { return base_->value(x) + offset_; }
  Vector gradient(const Vector& x) const override { return base_->gradient(x); }
  bool has_hessian_vec() const override { return base_->has_hessian_vec(); }
  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    return base_->hessian_vec(x, v);
  }
  double suggested_box() const override { return base_->suggested_box(); }
  std::optional<LipschitzBounds> analytic_lipschitz(const Vector& c, double r) const override {
    return base_->analytic_lipschitz(c, r);
  }

 private:
  ProblemPtr base_;
  double offset_;
};

bool all_finite(const Matrix& A) { return A.allFinite(); }

}  // namespace

ProblemPtr shifted(ProblemPtr base, double offset) {
  return std::make_shared<Shifted>(std::move(base), offset);
}

ProblemPtr matrix_factorization(const Matrix& target, int rank) {
  if (rank < 1) throw DomainError("matrix_factorization: rank must be >= 1");
  if (target.rows() < 1 || target.cols() < 1) {
    throw DimensionError("matrix_factorization: target matrix must be non-empty");
  }
  if (!all_finite(target)) throw DomainError("matrix_factorization: target has non-finite entries");
  return std::make_shared<MatrixFactorization>(target, rank);
}

ProblemPtr matrix_sensing(std::vector<Matrix> sensing, const Vector& measurements, int rank) {
  if (rank < 1) throw DomainError("matrix_sensing: rank must be >= 1");
  if (sensing.empty()) throw DimensionError("matrix_sensing: need at least one sensing matrix");
  if (static_cast<std::size_t>(measurements.size()) != sensing.size()) {
    std::ostringstream os;
    os << "matrix_sensing: " << sensing.size() << " sensing matrices but " << measurements.size()
       << " measurements";
    throw DimensionError(os.str());
  }
  const auto rows = sensing.front().rows();
  const auto cols = sensing.front().cols();
  if (rows < 1 || cols < 1) throw DimensionError("matrix_sensing: empty sensing matrix");
  for (const auto& A : sensing) {
    if (A.rows() != rows || A.cols() != cols) {
      throw DimensionError("matrix_sensing: sensing matrices have inconsistent shapes");
    }
    if (!all_finite(A)) throw DomainError("matrix_sensing: non-finite sensing matrix");
  }
  return std::make_shared<MatrixSensing>(std::move(sensing), measurements, rank);
}

ProblemPtr linear_network(const Matrix& inputs, const Matrix& targets, std::vector<int> widths) {
  if (widths.size() < 2) throw DimensionError("linear_network: need at least one layer");
  for (int w : widths) {
    if (w < 1) throw DimensionError("linear_network: layer widths must be >= 1");
  }
  if (inputs.rows() != widths.front()) {
    throw DimensionError("linear_network: input rows do not match n_0");
  }
  if (targets.rows() != widths.back()) {
    throw DimensionError("linear_network: target rows do not match n_l");
  }
  if (inputs.cols() != targets.cols() || inputs.cols() < 1) {
    throw DimensionError("linear_network: inputs and targets must have the same sample count");
  }
  return std::make_shared<LinearNetwork>(inputs, targets, std::move(widths));
}

Fixture parse_fixture(std::string_view name) {
  if (name == "quadratic") return Fixture::quadratic;
  if (name == "indefinite_quadratic") return Fixture::indefinite_quadratic;
  if (name == "quartic") return Fixture::quartic;
  throw DomainError("unknown fixture '" + std::string(name) + "'");
}

std::string_view fixture_name(Fixture fixture) {
  switch (fixture) {
    case Fixture::quadratic:
      return "quadratic";
    case Fixture::indefinite_quadratic:
      return "indefinite_quadratic";
    case Fixture::quartic:
      return "quartic";
  }
  return "unknown";
}

ProblemPtr synthetic(Fixture fixture, std::size_t dim) {
  switch (fixture) {
    case Fixture::quadratic:
      return std::make_shared<Quadratic>(dim == 0 ? 2 : dim);
    case Fixture::indefinite_quadratic:
      if (dim != 0 && dim != 2) throw DimensionError("indefinite_quadratic is two-dimensional");
      return std::make_shared<IndefiniteQuadratic>();
    case Fixture::quartic:
      return std::make_shared<Quartic>(dim == 0 ? 1 : dim);
  }
  throw DomainError("unknown fixture");
}

ProblemPtr synthetic(std::string_view name, std::size_t dim) {
  return synthetic(parse_fixture(name), dim);
}

}  // namespace momentum
