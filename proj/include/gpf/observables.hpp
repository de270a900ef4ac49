#pragma once

// Generalized observables on finite spaces. A generalized observable with
// outcome space L on an information space T is a row-stochastic matrix
// K[t][l]; its value on an event B is the function t -> sum_{l in B} K[t][l].

#include <utility>
#include <vector>

#include "gpf/measure.hpp"

namespace gpf {

template <typename Scalar>
class BasicOutcomeLaw {
 public:
  BasicOutcomeLaw(FiniteSpace outcome, Vector<Scalar> probabilities)
      : outcome_(std::move(outcome)), probabilities_(std::move(probabilities)) {
    if (probabilities_.size() != outcome_.size())
      throw Error(ErrorCode::SpaceMismatch, "law length differs from the outcome space");
    const Scalar tol(default_tolerances().weight);
    if ((probabilities_.array() < -tol).any()) throw Error(ErrorCode::NegativeWeight, "negative probability");
    probabilities_ = probabilities_.cwiseMax(Scalar(0));
    if (std::abs(probabilities_.sum() - Scalar(1)) > tol)
      throw Error(ErrorCode::InvalidArgument, "outcome law does not sum to 1");
  }

  const FiniteSpace& outcome() const { return outcome_; }
  const Vector<Scalar>& probabilities() const { return probabilities_; }
  Scalar operator()(Index i) const { return probabilities_(i); }

  Scalar probability(const Event& event) const {
    require_same_space(outcome_, event.space(), "event is not on the law's outcome space");
    Scalar s(0);
    for (Index m : event.members()) s += probabilities_(m);
    return s;
  }

 private:
  FiniteSpace outcome_;
  Vector<Scalar> probabilities_;
};

using OutcomeLaw = BasicOutcomeLaw<double>;

template <typename Scalar>
class BasicKernel {
 public:
  using MatrixType = Matrix<Scalar>;

  BasicKernel(FiniteSpace input, FiniteSpace outcome, MatrixType matrix)
      : input_(std::move(input)), outcome_(std::move(outcome)), matrix_(std::move(matrix)) {
    if (matrix_.rows() != input_.size() || matrix_.cols() != outcome_.size())
      throw Error(ErrorCode::DimensionMismatch, "kernel matrix shape does not match its spaces");
    const Scalar tol(default_tolerances().weight);
    for (Index r = 0; r < matrix_.rows(); ++r) {
      if ((matrix_.row(r).array() < -tol).any() || (matrix_.row(r).array() > Scalar(1) + tol).any())
        throw Error(ErrorCode::InvalidArgument, "kernel row '" + input_.label(r) + "' has entries outside [0,1]");
      if (std::abs(matrix_.row(r).sum() - Scalar(1)) > tol)
        throw Error(ErrorCode::InvalidArgument, "kernel row '" + input_.label(r) + "' does not sum to 1");
    }
  }

  const FiniteSpace& input() const { return input_; }
  const FiniteSpace& outcome() const { return outcome_; }
  const MatrixType& matrix() const { return matrix_; }
  Scalar operator()(Index in, Index out) const { return matrix_(in, out); }

  // The [0,1]-valued function t -> K(B)(t).
  Vector<Scalar> value(const Event& event) const {
    require_same_space(outcome_, event.space(), "event is not on the kernel's outcome space");
    Vector<Scalar> v = Vector<Scalar>::Zero(input_.size());
    for (Index m : event.members()) v += matrix_.col(m);
    return v;
  }

 private:
  FiniteSpace input_;
  FiniteSpace outcome_;
  MatrixType matrix_;
};

using Kernel = BasicKernel<double>;

template <typename Scalar = double>
BasicKernel<Scalar> identity_kernel(const FiniteSpace& space) {
  return BasicKernel<Scalar>(space, space, Matrix<Scalar>::Identity(space.size(), space.size()));
}

// Every row equal to `law`.
template <typename Scalar>
BasicKernel<Scalar> trivial_kernel(const FiniteSpace& input, const BasicOutcomeLaw<Scalar>& law) {
  Matrix<Scalar> m = law.probabilities().transpose().replicate(input.size(), 1);
  return BasicKernel<Scalar>(input, law.outcome(), std::move(m));
}

// Indicator kernel of a map: row t is the point mass at phi(t).
template <typename Scalar = double>
BasicKernel<Scalar> beable_kernel(const MeasurableMap& phi) {
  Matrix<Scalar> m = Matrix<Scalar>::Zero(phi.source().size(), phi.target().size());
  for (Index t = 0; t < phi.source().size(); ++t) m(t, phi(t)) = Scalar(1);
  return BasicKernel<Scalar>(phi.source(), phi.target(), std::move(m));
}

template <typename Scalar>
BasicOutcomeLaw<Scalar> outcome_law(const BasicKernel<Scalar>& kernel, const BasicInformationState<Scalar>& state) {
  require_same_space(kernel.input(), state.space(), "outcome_law: state is not on the kernel's input space");
  return BasicOutcomeLaw<Scalar>(kernel.outcome(), kernel.matrix().transpose() * state.weights());
}

// The state induced on the outcome space, sum_t state(t) K[t][.].
template <typename Scalar>
BasicInformationState<Scalar> apply_kernel(const BasicInformationState<Scalar>& state,
                                           const BasicKernel<Scalar>& kernel) {
  require_same_space(kernel.input(), state.space(), "apply_kernel: state is not on the kernel's input space");
  return BasicInformationState<Scalar>(kernel.outcome(), kernel.matrix().transpose() * state.weights());
}

// Rebuilds the unique kernel whose law at each point mass is the given law.
template <typename Scalar>
BasicKernel<Scalar> from_affine_family(const FiniteSpace& input, const std::vector<BasicOutcomeLaw<Scalar>>& dirac_laws) {
  if (static_cast<Index>(dirac_laws.size()) != input.size())
    throw Error(ErrorCode::SpaceMismatch, "need exactly one law per input atom");
  const FiniteSpace& outcome = dirac_laws.front().outcome();
  Matrix<Scalar> m(input.size(), outcome.size());
  for (Index t = 0; t < input.size(); ++t) {
    const auto& law = dirac_laws[static_cast<std::size_t>(t)];
    if (!(law.outcome() == outcome))
      throw Error(ErrorCode::OutcomeSpaceMismatch, "laws are on different outcome spaces");
    m.row(t) = law.probabilities().transpose();
  }
  return BasicKernel<Scalar>(input, outcome, std::move(m));
}

template <typename Scalar>
struct BasicTrivialityCheck {
  bool trivial = false;
  std::optional<Vector<Scalar>> witness;  // the common row when trivial
};

using TrivialityCheck = BasicTrivialityCheck<double>;

template <typename Scalar>
BasicTrivialityCheck<Scalar> is_trivial(const BasicKernel<Scalar>& kernel,
                                        Scalar tol = Scalar(default_tolerances().weight)) {
  const auto& m = kernel.matrix();
  for (Index r = 1; r < m.rows(); ++r)
    if ((m.row(r) - m.row(0)).cwiseAbs().maxCoeff() > tol) return {};
  return {true, Vector<Scalar>(m.row(0).transpose())};
}

// Every outcome with non-zero column mass has some input atom predicting it
// with certainty. Checking singletons suffices on a finite power-set algebra.
template <typename Scalar>
bool is_observable(const BasicKernel<Scalar>& kernel, Scalar tol = Scalar(default_tolerances().weight)) {
  const auto& m = kernel.matrix();
  for (Index l = 0; l < m.cols(); ++l) {
    if (m.col(l).maxCoeff() <= tol) continue;
    bool predicted = false;
    for (Index t = 0; t < m.rows() && !predicted; ++t) {
      Vector<Scalar> delta = Vector<Scalar>::Zero(m.cols());
      delta(l) = Scalar(1);
      predicted = (m.row(t).transpose() - delta).cwiseAbs().maxCoeff() <= tol;
    }
    if (!predicted) return false;
  }
  return true;
}

// Product observable on the outcome space L1 x L2: rows are outer products.
template <typename Scalar>
BasicKernel<Scalar> product(const BasicKernel<Scalar>& first, const BasicKernel<Scalar>& second) {
  require_same_space(first.input(), second.input(), "product: kernels on different input spaces");
  const Index n1 = first.outcome().size();
  const Index n2 = second.outcome().size();
  Matrix<Scalar> m(first.input().size(), n1 * n2);
  for (Index t = 0; t < m.rows(); ++t)
    for (Index a = 0; a < n1; ++a)
      for (Index b = 0; b < n2; ++b) m(t, a * n2 + b) = first(t, a) * second(t, b);
  return BasicKernel<Scalar>(first.input(), FiniteSpace::product(first.outcome(), second.outcome()), std::move(m));
}

template <typename Scalar>
std::pair<BasicKernel<Scalar>, BasicKernel<Scalar>> marginals(const BasicKernel<Scalar>& joint) {
  if (!joint.outcome().is_product())
    throw Error(ErrorCode::NotProductSpace, "marginals need a kernel on a product outcome space");
  const FiniteSpace& f1 = joint.outcome().factor(0);
  const FiniteSpace& f2 = joint.outcome().factor(1);
  const Index rows = joint.input().size();
  Matrix<Scalar> m1 = Matrix<Scalar>::Zero(rows, f1.size());
  Matrix<Scalar> m2 = Matrix<Scalar>::Zero(rows, f2.size());
  for (Index a = 0; a < f1.size(); ++a)
    for (Index b = 0; b < f2.size(); ++b) {
      m1.col(a) += joint.matrix().col(a * f2.size() + b);
      m2.col(b) += joint.matrix().col(a * f2.size() + b);
    }
  return {BasicKernel<Scalar>(joint.input(), f1, std::move(m1)), BasicKernel<Scalar>(joint.input(), f2, std::move(m2))};
}

// (pi * s)[t'][l] = sum_t pi[t][l] s[t'][t], i.e. the matrix product s * pi.
template <typename Scalar>
BasicKernel<Scalar> convolve(const BasicKernel<Scalar>& pi, const BasicKernel<Scalar>& s) {
  require_same_space(pi.input(), s.outcome(), "convolve: inner spaces differ");
  return BasicKernel<Scalar>(s.input(), pi.outcome(), s.matrix() * pi.matrix());
}

// Kernel on the map's source whose row at t' is the row at phi(t').
template <typename Scalar>
BasicKernel<Scalar> preimage(const BasicKernel<Scalar>& kernel, const MeasurableMap& phi) {
  require_same_space(kernel.input(), phi.target(), "preimage: map does not land in the kernel's input");
  Matrix<Scalar> m(phi.source().size(), kernel.outcome().size());
  for (Index t = 0; t < m.rows(); ++t) m.row(t) = kernel.matrix().row(phi(t));
  return BasicKernel<Scalar>(phi.source(), kernel.outcome(), std::move(m));
}

// Outcome relabelling through f: mass of all l with f(l) = l~ is pooled.
template <typename Scalar>
BasicKernel<Scalar> subordinate(const BasicKernel<Scalar>& kernel, const MeasurableMap& f) {
  require_same_space(kernel.outcome(), f.source(), "subordinate: map does not start at the outcome space");
  Matrix<Scalar> m = Matrix<Scalar>::Zero(kernel.input().size(), f.target().size());
  for (Index l = 0; l < kernel.outcome().size(); ++l) m.col(f(l)) += kernel.matrix().col(l);
  return BasicKernel<Scalar>(kernel.input(), f.target(), std::move(m));
}

}  // namespace gpf
