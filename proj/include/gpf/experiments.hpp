#pragma once

// Non-destructive experiments. An extended kernel maps an input atom to a
// joint distribution over (recorded outcome, posterior system atom); its
// marginals, instrument values and conditional posteriors describe what is
// seen and how the information state is updated ("reduced") by a trial.

#include <limits>

#include <Eigen/SVD>

#include "gpf/observables.hpp"
#include "gpf/random.hpp"

namespace gpf {

template <typename Scalar>
class BasicExtendedKernel {
 public:
  using MatrixType = Matrix<Scalar>;

  // Column (w, o) of `matrix` sits at w * output.size() + o.
  BasicExtendedKernel(FiniteSpace input, FiniteSpace outcome, FiniteSpace output, MatrixType matrix)
      : joint_(input, FiniteSpace::product(outcome, output), std::move(matrix)) {}

  explicit BasicExtendedKernel(BasicKernel<Scalar> joint) : joint_(std::move(joint)) {
    if (!joint_.outcome().is_product())
      throw Error(ErrorCode::NotProductSpace, "extended kernel needs an outcome x output space");
  }

  const FiniteSpace& input() const { return joint_.input(); }
  const FiniteSpace& outcome() const { return joint_.outcome().factor(0); }
  const FiniteSpace& output() const { return joint_.outcome().factor(1); }
  const MatrixType& matrix() const { return joint_.matrix(); }

  Index column(Index w, Index o) const { return w * output().size() + o; }
  Scalar operator()(Index in, Index w, Index o) const { return joint_.matrix()(in, column(w, o)); }

  // The same data as a plain kernel on outcome x output.
  const BasicKernel<Scalar>& as_kernel() const { return joint_; }

 private:
  BasicKernel<Scalar> joint_;
};

using ExtendedKernel = BasicExtendedKernel<double>;

template <typename Scalar>
BasicKernel<Scalar> outcome_marginal(const BasicExtendedKernel<Scalar>& ext) {
  return marginals(ext.as_kernel()).first;
}

template <typename Scalar>
BasicKernel<Scalar> system_marginal(const BasicExtendedKernel<Scalar>& ext) {
  return marginals(ext.as_kernel()).second;
}

// Law of the compound outcome (w, o) for a given input state.
template <typename Scalar>
BasicOutcomeLaw<Scalar> joint_law(const BasicExtendedKernel<Scalar>& ext, const BasicInformationState<Scalar>& state) {
  return outcome_law(ext.as_kernel(), state);
}

// Unnormalized posterior: m(o) = sum_{t, w in B} state(t) U[t][(w, o)].
template <typename Scalar>
BasicSubMeasure<Scalar> instrument_value(const BasicExtendedKernel<Scalar>& ext,
                                         const BasicInformationState<Scalar>& state, const Event& event) {
  require_same_space(ext.input(), state.space(), "instrument_value: state is not on the input space");
  require_same_space(ext.outcome(), event.space(), "instrument_value: event is not on the outcome space");
  const Index n_out = ext.output().size();
  Vector<Scalar> m = Vector<Scalar>::Zero(n_out);
  for (Index w : event.members())
    m += ext.matrix().middleCols(ext.column(w, 0), n_out).transpose() * state.weights();
  return BasicSubMeasure<Scalar>(ext.output(), std::move(m));
}

// Conditional posterior state given that the recorded outcome lies in B.
template <typename Scalar>
BasicInformationState<Scalar> posterior(const BasicExtendedKernel<Scalar>& ext,
                                        const BasicInformationState<Scalar>& state, const Event& event) {
  auto value = instrument_value(ext, state, event);
  if (value.total() <= Scalar(default_tolerances().weight)) {
    std::string labels;
    for (const auto& l : event.labels()) labels += (labels.empty() ? "" : ",") + l;
    throw Error(ErrorCode::ZeroProbabilityEvent, "event {" + labels + "} has zero probability");
  }
  return value.normalized();
}

// U[t][(w, o)] = [w = phi(t)] [o = g(t)].
template <typename Scalar = double>
BasicExtendedKernel<Scalar> extended_from_maps(const MeasurableMap& phi, const MeasurableMap& g) {
  require_same_space(phi.source(), g.source(), "extended_from_maps: maps have different sources");
  const Index n_out = g.target().size();
  Matrix<Scalar> m = Matrix<Scalar>::Zero(phi.source().size(), phi.target().size() * n_out);
  for (Index t = 0; t < m.rows(); ++t) m(t, phi(t) * n_out + g(t)) = Scalar(1);
  return BasicExtendedKernel<Scalar>(phi.source(), phi.target(), g.target(), std::move(m));
}

// A beable followed by the deterministic output map phi_out.
template <typename Scalar = double>
BasicExtendedKernel<Scalar> beable_extended(const MeasurableMap& phi, const MeasurableMap& phi_out) {
  return extended_from_maps<Scalar>(phi, phi_out);
}

// Non-perturbing form U[t][(w, o)] = m[t][w] [o = phi_out(t)].
template <typename Scalar>
BasicExtendedKernel<Scalar> factorized_extended(const BasicKernel<Scalar>& m, const MeasurableMap& phi_out) {
  require_same_space(m.input(), phi_out.source(), "factorized_extended: output map has the wrong source");
  const Index n_out = phi_out.target().size();
  Matrix<Scalar> u = Matrix<Scalar>::Zero(m.input().size(), m.outcome().size() * n_out);
  for (Index t = 0; t < u.rows(); ++t)
    for (Index w = 0; w < m.outcome().size(); ++w) u(t, w * n_out + phi_out(t)) = m(t, w);
  return BasicExtendedKernel<Scalar>(m.input(), m.outcome(), phi_out.target(), std::move(u));
}

template <typename Scalar>
struct BasicNonperturbingCheck {
  bool nonperturbing = false;
  std::optional<BasicKernel<Scalar>> factor;  // kernel on the preimage space
};

using NonperturbingCheck = BasicNonperturbingCheck<double>;

// Tests whether the preimage of `ext` along phi_in factorizes as
// r(t, w) [o = phi_out(t)] on the candidate chart.
template <typename Scalar>
BasicNonperturbingCheck<Scalar> check_nonperturbing(const BasicExtendedKernel<Scalar>& ext,
                                                    const FiniteSpace& preimage_space, const MeasurableMap& phi_in,
                                                    const MeasurableMap& phi_out,
                                                    Scalar tol = Scalar(default_tolerances().weight)) {
  require_same_space(phi_in.source(), preimage_space, "check_nonperturbing: phi_in has the wrong source");
  require_same_space(phi_out.source(), preimage_space, "check_nonperturbing: phi_out has the wrong source");
  require_same_space(phi_in.target(), ext.input(), "check_nonperturbing: phi_in does not land in the input");
  require_same_space(phi_out.target(), ext.output(), "check_nonperturbing: phi_out does not land in the output");
  const Index n_w = ext.outcome().size();
  const Index n_out = ext.output().size();
  Matrix<Scalar> r(preimage_space.size(), n_w);
  for (Index t = 0; t < preimage_space.size(); ++t) {
    const Index in = phi_in(t);
    const Index kept = phi_out(t);
    for (Index w = 0; w < n_w; ++w) {
      for (Index o = 0; o < n_out; ++o)
        if (o != kept && ext(in, w, o) > tol) return {};
      r(t, w) = ext(in, w, kept);
    }
    if (std::abs(r.row(t).sum() - Scalar(1)) > tol) return {};
  }
  r = r.cwiseMax(Scalar(0));
  for (Index t = 0; t < r.rows(); ++t) r.row(t) /= r.row(t).sum();
  return {true, BasicKernel<Scalar>(preimage_space, ext.outcome(), std::move(r))};
}

// Coordinates of each atom in a real vector space (one column per atom), with
// an optional linear functional that evaluates to 1 on every atom.
template <typename Scalar>
class BasicEmbedding {
 public:
  BasicEmbedding(FiniteSpace space, Matrix<Scalar> vectors, std::optional<Vector<Scalar>> normalization = std::nullopt)
      : space_(std::move(space)), vectors_(std::move(vectors)), normalization_(std::move(normalization)) {
    if (vectors_.cols() != space_.size() || vectors_.rows() < 1)
      throw Error(ErrorCode::DimensionMismatch, "embedding needs one vector per atom");
    if (normalization_) {
      if (normalization_->size() != vectors_.rows())
        throw Error(ErrorCode::DimensionMismatch, "normalization functional has the wrong length");
      const Scalar tol(default_tolerances().matrix);
      Vector<Scalar> values = vectors_.transpose() * *normalization_;
      if ((values.array() - Scalar(1)).abs().maxCoeff() > tol)
        throw Error(ErrorCode::InvalidArgument, "normalization functional is not 1 on every atom");
    }
  }

  const FiniteSpace& space() const { return space_; }
  Index dimension() const { return vectors_.rows(); }
  const Matrix<Scalar>& vectors() const { return vectors_; }
  auto vector(Index atom) const { return vectors_.col(atom); }
  const std::optional<Vector<Scalar>>& normalization() const { return normalization_; }

 private:
  FiniteSpace space_;
  Matrix<Scalar> vectors_;
  std::optional<Vector<Scalar>> normalization_;
};

using Embedding = BasicEmbedding<double>;

// Atom i -> e_i, normalized by the coordinate sum.
template <typename Scalar = double>
BasicEmbedding<Scalar> simplex_embedding(const FiniteSpace& space) {
  return BasicEmbedding<Scalar>(space, Matrix<Scalar>::Identity(space.size(), space.size()),
                                Vector<Scalar>::Ones(space.size()));
}

template <typename Scalar>
struct BasicMeanState {
  Vector<Scalar> coordinates;
};

using MeanState = BasicMeanState<double>;

template <typename Scalar>
BasicMeanState<Scalar> mean_state(const BasicInformationState<Scalar>& state, const BasicEmbedding<Scalar>& emb) {
  require_same_space(state.space(), emb.space(), "mean_state: embedding is on another space");
  return {emb.vectors() * state.weights()};
}

template <typename Scalar>
BasicMeanState<Scalar> posterior_mean(const BasicExtendedKernel<Scalar>& ext,
                                      const BasicInformationState<Scalar>& state, const Event& event,
                                      const BasicEmbedding<Scalar>& emb_out) {
  require_same_space(ext.output(), emb_out.space(), "posterior_mean: embedding is not on the output space");
  return mean_state(posterior(ext, state, event), emb_out);
}

namespace detail {

// Orthonormal basis of {d : V d = 0, sum(d) = 0}, i.e. directions that move a
// state without moving its mean.
template <typename Scalar>
Matrix<Scalar> same_mean_directions(const BasicEmbedding<Scalar>& emb) {
  const Index n = emb.space().size();
  Matrix<Scalar> constraints(emb.dimension() + 1, n);
  constraints.topRows(emb.dimension()) = emb.vectors();
  constraints.bottomRows(1).setOnes();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(constraints, Eigen::ComputeFullV);
  svd.setThreshold(Scalar(1e-10));
  const Index rank = svd.rank();
  return svd.matrixV().rightCols(n - rank);
}

// Pairs (state, state') with equal means, generated deterministically.
template <typename Scalar>
std::vector<std::pair<Vector<Scalar>, Vector<Scalar>>> same_mean_pairs(const BasicEmbedding<Scalar>& emb, int trials) {
  std::vector<std::pair<Vector<Scalar>, Vector<Scalar>>> pairs;
  const Matrix<Scalar> directions = same_mean_directions(emb);
  if (directions.cols() == 0) return pairs;
  const Index n = emb.space().size();
  constexpr std::uint64_t kSeed = 0x6d65616e5f737461ULL;
  for (int trial = 0; trial < trials; ++trial) {
    CounterRng rng(kSeed, static_cast<std::uint64_t>(trial));
    Vector<Scalar> base(n);
    for (Index i = 0; i < n; ++i) base(i) = Scalar(-std::log(1.0 - rng.uniform()) + 1e-3);
    base /= base.sum();
    Vector<Scalar> z(directions.cols());
    for (Index i = 0; i < z.size(); ++i) z(i) = Scalar(rng.normal());
    Vector<Scalar> d = directions * z;
    Scalar max_step = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < n; ++i)
      if (d(i) < Scalar(0)) max_step = std::min(max_step, base(i) / -d(i));
    if (!std::isfinite(static_cast<double>(max_step))) continue;
    Vector<Scalar> other = (base + Scalar(0.5) * max_step * d).cwiseMax(Scalar(0));
    pairs.emplace_back(base, other / other.sum());
  }
  return pairs;
}

}  // namespace detail

// Samples state pairs with equal means and reports whether the outcome law
// agrees on all of them. Vacuously true when the embedding is injective on
// the simplex.
template <typename Scalar>
bool is_mean_determined(const BasicKernel<Scalar>& kernel, const BasicEmbedding<Scalar>& emb, int trials,
                        Scalar tol = Scalar(default_tolerances().matrix)) {
  require_same_space(kernel.input(), emb.space(), "is_mean_determined: embedding is not on the input space");
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
  for (const auto& [a, b] : detail::same_mean_pairs(emb, trials)) {
    Vector<Scalar> diff = kernel.matrix().transpose() * (a - b);
    if (diff.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

// Extended version: the whole joint law over (outcome, output), hence every
// instrument value, has to agree.
template <typename Scalar>
bool is_mean_determined(const BasicExtendedKernel<Scalar>& ext, const BasicEmbedding<Scalar>& emb, int trials,
                        Scalar tol = Scalar(default_tolerances().matrix)) {
  return is_mean_determined(ext.as_kernel(), emb, trials, tol);
}

}  // namespace gpf
