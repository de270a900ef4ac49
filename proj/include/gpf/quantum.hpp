#pragma once

// Finite-dimensional quantum instantiation: density matrices, POVMs, extended
// POV measures with a discrete set of prepared pure states, the state
// instruments they induce, and Choi-matrix certification of those maps.

#include <complex>
#include <thread>

#include <Eigen/Eigenvalues>

#include "gpf/experiments.hpp"

namespace gpf {

template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
Real skew_norm(const ComplexMatrix<Real>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / Real(2);
}

// (M + M^dagger) / 2, or InvalidArgument when the anti-Hermitian part exceeds tol.
template <typename Real>
ComplexMatrix<Real> hermitize(const ComplexMatrix<Real>& m, Real tol, std::string_view what) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " is not square");
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " has non-finite entries");
  if (skew_norm(m) > tol) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not Hermitian");
  return (m + m.adjoint()) / Real(2);
}

template <typename Real>
Real min_eigenvalue(const ComplexMatrix<Real>& hermitian) {
  if (hermitian.size() == 0) return Real(0);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

template <typename Real>
std::complex<Real> trace_product(const ComplexMatrix<Real>& a, const ComplexMatrix<Real>& b) {
  return (a.transpose().array() * b.array()).sum();  // tr{a b}
}

// Row-major vectorization: vec(M)[i * cols + j] = M(i, j).
template <typename Real>
ComplexVector<Real> vec(const ComplexMatrix<Real>& m) {
  ComplexVector<Real> v(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

template <typename Real>
ComplexMatrix<Real> unvec(const ComplexVector<Real>& v, Index dim) {
  ComplexMatrix<Real> m(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) m(i, j) = v(i * dim + j);
  return m;
}

template <typename Real>
class BasicDensityMatrix {
 public:
  explicit BasicDensityMatrix(const ComplexMatrix<Real>& m) {
    const Real tol(default_tolerances().matrix);
    matrix_ = hermitize(m, tol, "density matrix");
    if (min_eigenvalue(matrix_) < -tol) throw Error(ErrorCode::InvalidArgument, "density matrix is not PSD");
    if (std::abs(matrix_.trace().real() - Real(1)) > tol)
      throw Error(ErrorCode::InvalidArgument, "density matrix does not have unit trace");
  }

  Index dimension() const { return matrix_.rows(); }
  const ComplexMatrix<Real>& matrix() const { return matrix_; }

  static BasicDensityMatrix maximally_mixed(Index dim) {
    return BasicDensityMatrix(ComplexMatrix<Real>::Identity(dim, dim) / Real(dim));
  }

 private:
  ComplexMatrix<Real> matrix_;
};

using DensityMatrix = BasicDensityMatrix<double>;

// Unit vector with its first non-negligible amplitude made real and positive,
// so that equal projectors give equal vectors.
template <typename Real>
class BasicPureState {
 public:
  explicit BasicPureState(ComplexVector<Real> psi) {
    const Real norm = psi.norm();
    if (!(norm > Real(1e-12)) || !psi.allFinite())
      throw Error(ErrorCode::InvalidArgument, "pure state needs a non-zero finite vector");
    if (std::abs(norm - Real(1)) > Real(8) * std::numeric_limits<Real>::epsilon()) psi /= norm;
    for (Index i = 0; i < psi.size(); ++i) {
      if (std::abs(psi(i)) > Real(1e-12)) {
        psi *= std::conj(psi(i)) / std::abs(psi(i));
        psi(i) = std::complex<Real>(psi(i).real(), Real(0));
        break;
      }
    }
    psi_ = std::move(psi);
  }

  static BasicPureState basis(Index dim, Index k) {
    ComplexVector<Real> v = ComplexVector<Real>::Zero(dim);
    v(k) = Real(1);
    return BasicPureState(std::move(v));
  }

  Index dimension() const { return psi_.size(); }
  const ComplexVector<Real>& vector() const { return psi_; }
  ComplexMatrix<Real> projector() const { return psi_ * psi_.adjoint(); }
  BasicDensityMatrix<Real> density() const { return BasicDensityMatrix<Real>(projector()); }

 private:
  ComplexVector<Real> psi_;
};

using PureState = BasicPureState<double>;

template <typename Real>
class BasicPOVM {
 public:
  BasicPOVM(FiniteSpace outcome, std::vector<ComplexMatrix<Real>> effects) : outcome_(std::move(outcome)) {
    if (static_cast<Index>(effects.size()) != outcome_.size())
      throw Error(ErrorCode::DimensionMismatch, "POVM needs one effect per outcome");
    const Real tol(default_tolerances().matrix);
    const Index dim = effects.front().rows();
    ComplexMatrix<Real> total = ComplexMatrix<Real>::Zero(dim, dim);
    for (std::size_t k = 0; k < effects.size(); ++k) {
      const std::string what = "effect '" + outcome_.label(static_cast<Index>(k)) + "'";
      if (effects[k].rows() != dim) throw Error(ErrorCode::DimensionMismatch, what + " has the wrong dimension");
      effects_.push_back(hermitize(effects[k], tol, what));
      if (min_eigenvalue(effects_.back()) < -tol) throw Error(ErrorCode::InvalidArgument, what + " is not PSD");
      total += effects_.back();
    }
    if ((total - ComplexMatrix<Real>::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
      throw Error(ErrorCode::InvalidArgument, "POVM effects do not sum to the identity");
  }

  const FiniteSpace& outcome() const { return outcome_; }
  Index dimension() const { return effects_.front().rows(); }
  const std::vector<ComplexMatrix<Real>>& effects() const { return effects_; }
  const ComplexMatrix<Real>& effect(Index k) const { return effects_.at(static_cast<std::size_t>(k)); }

  // Mutually orthogonal idempotent effects.
  bool is_projective(Real tol = Real(default_tolerances().matrix)) const {
    for (std::size_t i = 0; i < effects_.size(); ++i) {
      if ((effects_[i] * effects_[i] - effects_[i]).cwiseAbs().maxCoeff() > tol) return false;
      for (std::size_t j = i + 1; j < effects_.size(); ++j)
        if ((effects_[i] * effects_[j]).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
  }

 private:
  FiniteSpace outcome_;
  std::vector<ComplexMatrix<Real>> effects_;
};

using POVM = BasicPOVM<double>;

// Extended POV measure with discretized posterior states: operator(k, j) is
// the effect for "outcome k recorded and prepared state j produced".
template <typename Real>
class BasicQuantumExtendedObservable {
 public:
  BasicQuantumExtendedObservable(FiniteSpace outcome, std::vector<BasicPureState<Real>> prepared,
                                 std::vector<std::vector<ComplexMatrix<Real>>> operators)
      : outcome_(std::move(outcome)), prepared_(std::move(prepared)) {
    if (prepared_.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one prepared state");
    if (static_cast<Index>(operators.size()) != outcome_.size())
      throw Error(ErrorCode::DimensionMismatch, "need one operator list per outcome");
    const Index out_dim = prepared_.front().dimension();
    for (const auto& p : prepared_)
      if (p.dimension() != out_dim) throw Error(ErrorCode::DimensionMismatch, "prepared states differ in dimension");
    const Real tol(default_tolerances().matrix);
    const Index dim = operators.front().empty() ? 0 : operators.front().front().rows();
    if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "empty operator list");
    ComplexMatrix<Real> total = ComplexMatrix<Real>::Zero(dim, dim);
    for (std::size_t k = 0; k < operators.size(); ++k) {
      if (operators[k].size() != prepared_.size())
        throw Error(ErrorCode::DimensionMismatch, "need one operator per prepared state");
      auto& row = operators_.emplace_back();
      for (std::size_t j = 0; j < prepared_.size(); ++j) {
        const std::string what = "operator (" + outcome_.label(static_cast<Index>(k)) + ", " + std::to_string(j) + ")";
        if (operators[k][j].rows() != dim) throw Error(ErrorCode::DimensionMismatch, what + " has the wrong dimension");
        row.push_back(hermitize(operators[k][j], tol, what));
        if (min_eigenvalue(row.back()) < -tol) throw Error(ErrorCode::InvalidArgument, what + " is not PSD");
        total += row.back();
      }
    }
    if ((total - ComplexMatrix<Real>::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
      throw Error(ErrorCode::InvalidArgument, "extended observable does not sum to the identity");
  }

  const FiniteSpace& outcome() const { return outcome_; }
  const std::vector<BasicPureState<Real>>& prepared() const { return prepared_; }
  Index input_dimension() const { return operators_.front().front().rows(); }
  Index output_dimension() const { return prepared_.front().dimension(); }
  const ComplexMatrix<Real>& op(Index k, Index j) const {
    return operators_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(j));
  }
  Index prepared_count() const { return static_cast<Index>(prepared_.size()); }

 private:
  FiniteSpace outcome_;
  std::vector<BasicPureState<Real>> prepared_;
  std::vector<std::vector<ComplexMatrix<Real>>> operators_;
};

using QuantumExtendedObservable = BasicQuantumExtendedObservable<double>;

// Linear map from d_in x d_in to d_out x d_out matrices, stored as its action
// on row-major vectorizations: vec(W(T)) = action * vec(T).
template <typename Real>
class BasicSuperOperator {
 public:
  BasicSuperOperator(Index dim_in, Index dim_out, ComplexMatrix<Real> action)
      : dim_in_(dim_in), dim_out_(dim_out), action_(std::move(action)) {
    if (dim_in < 1 || dim_out < 1 || action_.rows() != dim_out * dim_out || action_.cols() != dim_in * dim_in)
      throw Error(ErrorCode::DimensionMismatch, "action matrix must be d_out^2 x d_in^2");
  }

  static BasicSuperOperator identity(Index dim) {
    return BasicSuperOperator(dim, dim, ComplexMatrix<Real>::Identity(dim * dim, dim * dim));
  }

  static BasicSuperOperator transpose(Index dim) {
    ComplexMatrix<Real> a = ComplexMatrix<Real>::Zero(dim * dim, dim * dim);
    for (Index i = 0; i < dim; ++i)
      for (Index j = 0; j < dim; ++j) a(j * dim + i, i * dim + j) = Real(1);
    return BasicSuperOperator(dim, dim, std::move(a));
  }

  static BasicSuperOperator zero(Index dim_in, Index dim_out) {
    return BasicSuperOperator(dim_in, dim_out, ComplexMatrix<Real>::Zero(dim_out * dim_out, dim_in * dim_in));
  }

  Index input_dimension() const { return dim_in_; }
  Index output_dimension() const { return dim_out_; }
  const ComplexMatrix<Real>& action() const { return action_; }

  ComplexMatrix<Real> operator()(const ComplexMatrix<Real>& t) const {
    if (t.rows() != dim_in_ || t.cols() != dim_in_) throw Error(ErrorCode::DimensionMismatch, "argument dimension");
    return unvec<Real>(action_ * vec(t), dim_out_);
  }

  friend BasicSuperOperator operator+(const BasicSuperOperator& a, const BasicSuperOperator& b) {
    if (a.dim_in_ != b.dim_in_ || a.dim_out_ != b.dim_out_)
      throw Error(ErrorCode::DimensionMismatch, "adding maps of different shapes");
    return BasicSuperOperator(a.dim_in_, a.dim_out_, a.action_ + b.action_);
  }

 private:
  Index dim_in_;
  Index dim_out_;
  ComplexMatrix<Real> action_;
};

using SuperOperator = BasicSuperOperator<double>;

template <typename Real>
BasicOutcomeLaw<Real> born_law(const BasicDensityMatrix<Real>& rho, const BasicPOVM<Real>& povm) {
  if (rho.dimension() != povm.dimension()) throw Error(ErrorCode::DimensionMismatch, "born_law: dimensions differ");
  const Tolerances tol = default_tolerances();
  Vector<Real> p(povm.outcome().size());
  for (Index k = 0; k < p.size(); ++k) {
    const std::complex<Real> t = trace_product(rho.matrix(), povm.effect(k));
    if (std::abs(t.imag()) > Real(tol.certificate))
      throw Error(ErrorCode::NumericalInconsistency, "tr{rho E} has an imaginary part");
    p(k) = std::clamp(t.real(), Real(0), Real(1));
  }
  if (std::abs(p.sum() - Real(1)) > Real(tol.matrix))
    throw Error(ErrorCode::NumericalInconsistency, "Born probabilities do not sum to 1");
  return BasicOutcomeLaw<Real>(povm.outcome(), p / p.sum());
}

template <typename Real>
BasicPOVM<Real> q_outcome_marginal(const BasicQuantumExtendedObservable<Real>& qeo) {
  const Index dim = qeo.input_dimension();
  std::vector<ComplexMatrix<Real>> effects;
  for (Index k = 0; k < qeo.outcome().size(); ++k) {
    ComplexMatrix<Real> e = ComplexMatrix<Real>::Zero(dim, dim);
    for (Index j = 0; j < qeo.prepared_count(); ++j) e += qeo.op(k, j);
    effects.push_back(std::move(e));
  }
  return BasicPOVM<Real>(qeo.outcome(), std::move(effects));
}

// T -> sum_{k in B, j} p_j tr{T A(k, j)}.
template <typename Real>
BasicSuperOperator<Real> state_instrument(const BasicQuantumExtendedObservable<Real>& qeo, const Event& event) {
  if (!(event.space() == qeo.outcome()))
    throw Error(ErrorCode::UnknownOutcome, "event is not on the observable's outcome space");
  const Index d_in = qeo.input_dimension();
  const Index d_out = qeo.output_dimension();
  ComplexMatrix<Real> action = ComplexMatrix<Real>::Zero(d_out * d_out, d_in * d_in);
  for (Index k : event.members())
    for (Index j = 0; j < qeo.prepared_count(); ++j) {
      // tr{T A} = sum_ab T(a,b) A(b,a): the functional is vec(A^T).
      const ComplexMatrix<Real> at = qeo.op(k, j).transpose();
      action += vec<Real>(qeo.prepared()[static_cast<std::size_t>(j)].projector()) * vec<Real>(at).transpose();
    }
  return BasicSuperOperator<Real>(d_in, d_out, std::move(action));
}

template <typename Real>
BasicSuperOperator<Real> state_instrument(const BasicQuantumExtendedObservable<Real>& qeo,
                                          const std::vector<std::string>& labels) {
  std::vector<Index> members;
  for (const auto& l : labels) {
    auto i = qeo.outcome().find(l);
    if (!i) throw Error(ErrorCode::UnknownOutcome, "no outcome '" + l + "'");
    members.push_back(*i);
  }
  return state_instrument(qeo, Event(qeo.outcome(), std::move(members)));
}

template <typename Real>
struct BasicQuantumPosterior {
  BasicDensityMatrix<Real> density;
  Vector<Real> weights;  // over the prepared states
  Real probability;      // of the conditioning event
};

using QuantumPosterior = BasicQuantumPosterior<double>;

template <typename Real>
BasicQuantumPosterior<Real> q_posterior(const BasicQuantumExtendedObservable<Real>& qeo,
                                        const BasicDensityMatrix<Real>& rho, const Event& event) {
  if (rho.dimension() != qeo.input_dimension()) throw Error(ErrorCode::DimensionMismatch, "q_posterior: dimensions");
  if (!(event.space() == qeo.outcome())) throw Error(ErrorCode::UnknownOutcome, "event is not on the outcome space");
  Vector<Real> w = Vector<Real>::Zero(qeo.prepared_count());
  for (Index k : event.members())
    for (Index j = 0; j < qeo.prepared_count(); ++j)
      w(j) += std::max(trace_product(rho.matrix(), qeo.op(k, j)).real(), Real(0));
  const Real mass = w.sum();
  if (mass <= Real(default_tolerances().weight))
    throw Error(ErrorCode::ZeroProbabilityEvent, "conditioning event has zero probability");
  w /= mass;
  const Index d_out = qeo.output_dimension();
  ComplexMatrix<Real> out = ComplexMatrix<Real>::Zero(d_out, d_out);
  for (Index j = 0; j < w.size(); ++j) out += w(j) * qeo.prepared()[static_cast<std::size_t>(j)].projector();
  return {BasicDensityMatrix<Real>(out), std::move(w), mass};
}

// Block matrix whose (i, j) block is W(|i><j|).
template <typename Real>
ComplexMatrix<Real> choi(const BasicSuperOperator<Real>& op) {
  const Index d_in = op.input_dimension();
  const Index d_out = op.output_dimension();
  ComplexMatrix<Real> c(d_in * d_out, d_in * d_out);
  for (Index i = 0; i < d_in; ++i)
    for (Index j = 0; j < d_in; ++j)
      for (Index a = 0; a < d_out; ++a)
        for (Index b = 0; b < d_out; ++b) c(i * d_out + a, j * d_out + b) = op.action()(a * d_out + b, i * d_in + j);
  return c;
}

template <typename Real>
struct BasicCpCheck {
  bool completely_positive = false;
  Real min_eigenvalue{};  // of the Hermitian part of the Choi matrix
  bool hermitian = true;  // Choi matrix Hermitian within the matrix tolerance
};

using CpCheck = BasicCpCheck<double>;

template <typename Real>
BasicCpCheck<Real> is_completely_positive(const BasicSuperOperator<Real>& op,
                                          Real tol = Real(default_tolerances().certificate)) {
  const ComplexMatrix<Real> c = choi(op);
  const bool hermitian = skew_norm(c) <= Real(default_tolerances().matrix);
  const Real lowest = min_eigenvalue<Real>((c + c.adjoint()) / Real(2));
  return {hermitian && lowest >= -tol, lowest, hermitian};
}

// tr{W(E_ij)} = delta_ij on every matrix unit.
template <typename Real>
bool is_trace_preserving(const BasicSuperOperator<Real>& op, Real tol = Real(default_tolerances().matrix)) {
  const Index d_in = op.input_dimension();
  const Index d_out = op.output_dimension();
  for (Index i = 0; i < d_in; ++i)
    for (Index j = 0; j < d_in; ++j) {
      std::complex<Real> tr(0);
      for (Index a = 0; a < d_out; ++a) tr += op.action()(a * d_out + a, i * d_in + j);
      if (std::abs(tr - std::complex<Real>(i == j ? Real(1) : Real(0))) > tol) return false;
    }
  return true;
}

// Real coordinates of a Hermitian matrix: the diagonal, then (Re, Im) of each
// upper off-diagonal entry. Linear, and injective on Hermitian matrices.
template <typename Real>
Vector<Real> hermitian_coordinates(const ComplexMatrix<Real>& m) {
  const Index d = m.rows();
  Vector<Real> v(d * d);
  Index n = 0;
  for (Index i = 0; i < d; ++i) v(n++) = m(i, i).real();
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      v(n++) = m(i, j).real();
      v(n++) = m(i, j).imag();
    }
  return v;
}

// Embeds atoms labelled by pure states via their projectors; the
// normalization functional is the trace.
template <typename Real>
BasicEmbedding<Real> density_embedding(const FiniteSpace& space, const std::vector<BasicPureState<Real>>& states) {
  if (static_cast<Index>(states.size()) != space.size())
    throw Error(ErrorCode::DimensionMismatch, "need one pure state per atom");
  const Index d = states.front().dimension();
  Matrix<Real> vectors(d * d, space.size());
  for (Index i = 0; i < space.size(); ++i)
    vectors.col(i) = hermitian_coordinates<Real>(states[static_cast<std::size_t>(i)].projector());
  Vector<Real> trace = Vector<Real>::Zero(d * d);
  trace.head(d).setOnes();
  return BasicEmbedding<Real>(space, std::move(vectors), std::move(trace));
}

template <typename Real>
FiniteSpace prepared_space(const BasicQuantumExtendedObservable<Real>& qeo) {
  std::vector<std::string> labels;
  for (Index j = 0; j < qeo.prepared_count(); ++j) labels.push_back("p" + std::to_string(j));
  return FiniteSpace(std::move(labels));
}

// Classical extended kernel of a quantum extended observable restricted to a
// finite family of input pure states: U[t][(k, j)] = tr{p_t A(k, j)}. Its
// output space is prepared_space(qeo).
template <typename Real>
BasicExtendedKernel<Real> qeo_as_extended(const BasicQuantumExtendedObservable<Real>& qeo, const FiniteSpace& input,
                                          const std::vector<BasicPureState<Real>>& input_states) {
  if (static_cast<Index>(input_states.size()) != input.size())
    throw Error(ErrorCode::DimensionMismatch, "need one pure state per input atom");
  const Index n_out = qeo.prepared_count();
  Matrix<Real> u(input.size(), qeo.outcome().size() * n_out);
  for (Index t = 0; t < input.size(); ++t) {
    const auto p = input_states[static_cast<std::size_t>(t)].projector();
    for (Index k = 0; k < qeo.outcome().size(); ++k)
      for (Index j = 0; j < n_out; ++j) u(t, k * n_out + j) = std::max(trace_product(p, qeo.op(k, j)).real(), Real(0));
    u.row(t) /= u.row(t).sum();
  }
  return BasicExtendedKernel<Real>(input, qeo.outcome(), prepared_space(qeo), std::move(u));
}

template <typename Real>
BasicPureState<Real> haar_pure_state(Index dim, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(seed, index);
  ComplexVector<Real> v(dim);
  for (Index i = 0; i < dim; ++i) {
    const Real re(rng.normal());
    const Real im(rng.normal());
    v(i) = std::complex<Real>(re, im);
  }
  return BasicPureState<Real>(std::move(v));
}

template <typename Real>
struct BasicDeterministicResponse {
  std::optional<Index> outcome;  // set iff every tr{p P_i} is 0 or 1
  Vector<Real> traces;
};

using DeterministicResponse = BasicDeterministicResponse<double>;

// Whether a pure state admits an indicator-valued response to a projective
// measurement, i.e. whether chi(i) = tr{p P_i} can hold with chi in {0, 1}.
template <typename Real>
BasicDeterministicResponse<Real> nogo_deterministic_response(const BasicPureState<Real>& p,
                                                             const BasicPOVM<Real>& pvm,
                                                             Real tol = Real(default_tolerances().matrix)) {
  if (p.dimension() != pvm.dimension()) throw Error(ErrorCode::DimensionMismatch, "state and PVM dimensions differ");
  if (!pvm.is_projective(Real(default_tolerances().matrix)))
    throw Error(ErrorCode::NotProjective, "effects are not orthogonal projectors");
  BasicDeterministicResponse<Real> r;
  r.traces.resize(pvm.outcome().size());
  const auto& psi = p.vector();
  bool deterministic = true;
  for (Index i = 0; i < r.traces.size(); ++i) {
    r.traces(i) = psi.dot(pvm.effect(i) * psi).real();
    if (std::abs(r.traces(i)) > tol && std::abs(r.traces(i) - Real(1)) > tol) deterministic = false;
  }
  if (deterministic) {
    Index best = 0;
    r.traces.maxCoeff(&best);
    r.outcome = best;
  }
  return r;
}

struct NogoReport {
  std::uint64_t total = 0;
  std::uint64_t deterministic_count = 0;
  std::uint64_t eigenstate_count = 0;
};

namespace detail {

// Orthonormal basis of the range of a projector.
template <typename Real>
ComplexMatrix<Real> projector_range(const ComplexMatrix<Real>& p) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> solver(p);
  std::vector<Index> keep;
  for (Index i = 0; i < p.rows(); ++i)
    if (solver.eigenvalues()(i) > Real(0.5)) keep.push_back(i);
  ComplexMatrix<Real> basis(p.rows(), static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) basis.col(static_cast<Index>(c)) = solver.eigenvectors().col(keep[c]);
  return basis;
}

}  // namespace detail

// Scans Haar-random pure states (plus any injected ones) for deterministic
// responses. Every deterministic state has to be an eigenvector of some
// projector; the eigenvector test goes through an eigendecomposition of the
// projectors rather than the traces, and a disagreement is reported as
// NumericalInconsistency. Sample i depends only on (seed, i).
template <typename Real>
NogoReport nogo_scan(const BasicPOVM<Real>& pvm, std::uint64_t samples, std::uint64_t seed,
                     Real tol = Real(default_tolerances().matrix),
                     const std::vector<BasicPureState<Real>>& injected = {}, unsigned threads = 1) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
  if (!pvm.is_projective(Real(default_tolerances().matrix)))
    throw Error(ErrorCode::NotProjective, "effects are not orthogonal projectors");
  std::vector<ComplexMatrix<Real>> ranges;
  for (const auto& e : pvm.effects()) ranges.push_back(detail::projector_range<Real>(e));

  const std::uint64_t total = samples + injected.size();
  auto state_at = [&](std::uint64_t i) {
    return i < samples ? haar_pure_state<Real>(pvm.dimension(), seed, i) : injected[static_cast<std::size_t>(i - samples)];
  };
  auto classify = [&](std::uint64_t begin, std::uint64_t end, NogoReport& out) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const auto p = state_at(i);
      if (nogo_deterministic_response(p, pvm, tol).outcome) ++out.deterministic_count;
      for (const auto& basis : ranges) {
        if (basis.cols() > 0 && Real(1) - (basis.adjoint() * p.vector()).squaredNorm() <= tol) {
          ++out.eigenstate_count;
          break;
        }
      }
    }
  };

  threads = std::max(1u, threads);
  std::vector<NogoReport> partial(threads);
  if (threads == 1) {
    classify(0, total, partial[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (total + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t begin = std::min(total, t * chunk);
      const std::uint64_t end = std::min(total, begin + chunk);
      pool.emplace_back([&, t, begin, end] { classify(begin, end, partial[t]); });
    }
    for (auto& th : pool) th.join();
  }
  NogoReport report;
  report.total = total;
  for (const auto& p : partial) {
    report.deterministic_count += p.deterministic_count;
    report.eigenstate_count += p.eigenstate_count;
  }
  if (report.deterministic_count != report.eigenstate_count)
    throw Error(ErrorCode::NumericalInconsistency, "deterministic responses do not match PVM eigenstates");
  return report;
}

}  // namespace gpf
