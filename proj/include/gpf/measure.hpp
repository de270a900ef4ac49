#pragma once

// Finite measurable spaces and the states that live on them. Every space is a
// finite, ordered atom set with the full power set as its sigma-algebra, so
// measures are weight vectors and events are atom subsets.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gpf/error.hpp"
#include "gpf/tolerance.hpp"

namespace gpf {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Separator used in the labels of product-space atoms, e.g. "heads|up".
inline constexpr std::string_view kProductSeparator = "|";

class FiniteSpace {
 public:
  explicit FiniteSpace(std::vector<std::string> atoms);

  // Cartesian product; atom (i, j) sits at index i * second.size() + j and is
  // labelled "first_i|second_j". The factors are kept so that marginals never
  // have to split labels.
  static FiniteSpace product(const FiniteSpace& first, const FiniteSpace& second);

  Index size() const;
  const std::vector<std::string>& atoms() const;
  const std::string& label(Index i) const;
  std::optional<Index> find(std::string_view label) const;
  Index index_of(std::string_view label) const;
  bool is_product() const;

  const FiniteSpace& factor(int which) const;

  friend bool operator==(const FiniteSpace& a, const FiniteSpace& b);

 private:
  struct Impl;
  explicit FiniteSpace(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

struct FiniteSpace::Impl {
  std::vector<std::string> atoms;
  std::unordered_map<std::string, Index> index;
  std::vector<FiniteSpace> factors;
};

inline Index FiniteSpace::size() const { return static_cast<Index>(impl_->atoms.size()); }
inline const std::vector<std::string>& FiniteSpace::atoms() const { return impl_->atoms; }
inline const std::string& FiniteSpace::label(Index i) const { return impl_->atoms.at(static_cast<std::size_t>(i)); }

inline std::optional<Index> FiniteSpace::find(std::string_view label) const {
  auto it = impl_->index.find(std::string(label));
  if (it == impl_->index.end()) return std::nullopt;
  return it->second;
}

inline Index FiniteSpace::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorCode::UnknownAtom, "no atom '" + std::string(label) + "' in space");
}

inline bool FiniteSpace::is_product() const { return impl_->factors.size() == 2; }

inline FiniteSpace::FiniteSpace(std::vector<std::string> atoms) {
  if (atoms.empty()) throw Error(ErrorCode::InvalidArgument, "a space needs at least one atom");
  auto impl = std::make_shared<Impl>();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!impl->index.emplace(atoms[i], static_cast<Index>(i)).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate atom label '" + atoms[i] + "'");
  }
  impl->atoms = std::move(atoms);
  impl_ = std::move(impl);
}

inline FiniteSpace FiniteSpace::product(const FiniteSpace& first, const FiniteSpace& second) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(first.size() * second.size()));
  for (const auto& a : first.atoms())
    for (const auto& b : second.atoms()) labels.push_back(a + std::string(kProductSeparator) + b);
  FiniteSpace flat(std::move(labels));
  auto impl = std::make_shared<Impl>(*flat.impl_);
  impl->factors = {first, second};
  return FiniteSpace(std::shared_ptr<const Impl>(std::move(impl)));
}

inline const FiniteSpace& FiniteSpace::factor(int which) const {
  if (!is_product()) throw Error(ErrorCode::NotProductSpace, "space has no factor structure");
  if (which != 0 && which != 1) throw Error(ErrorCode::InvalidArgument, "factor index must be 0 or 1");
  return impl_->factors[static_cast<std::size_t>(which)];
}

inline bool operator==(const FiniteSpace& a, const FiniteSpace& b) {
  if (a.impl_ == b.impl_) return true;
  if (a.impl_->atoms != b.impl_->atoms) return false;
  if (a.impl_->factors.size() != b.impl_->factors.size()) return false;
  for (std::size_t i = 0; i < a.impl_->factors.size(); ++i)
    if (!(a.impl_->factors[i] == b.impl_->factors[i])) return false;
  return true;
}

inline void require_same_space(const FiniteSpace& a, const FiniteSpace& b, std::string_view what) {
  if (!(a == b)) throw Error(ErrorCode::SpaceMismatch, std::string(what));
}

// A subset of atoms, kept as sorted unique indices.
class Event {
 public:
  Event(FiniteSpace space, std::vector<Index> members) : space_(std::move(space)) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (Index m : members)
      if (m < 0 || m >= space_.size()) throw Error(ErrorCode::UnknownAtom, "event index out of range");
    members_ = std::move(members);
  }

  static Event from_labels(const FiniteSpace& space, const std::vector<std::string>& labels) {
    std::vector<Index> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(space.index_of(l));
    return Event(space, std::move(idx));
  }

  static Event all(const FiniteSpace& space) {
    std::vector<Index> idx(static_cast<std::size_t>(space.size()));
    for (Index i = 0; i < space.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
    return Event(space, std::move(idx));
  }

  static Event none(const FiniteSpace& space) { return Event(space, {}); }
  static Event singleton(const FiniteSpace& space, Index i) { return Event(space, {i}); }

  const FiniteSpace& space() const { return space_; }
  const std::vector<Index>& members() const { return members_; }
  bool empty() const { return members_.empty(); }
  bool contains(Index i) const { return std::binary_search(members_.begin(), members_.end(), i); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (Index m : members_) out.push_back(space_.label(m));
    return out;
  }

 private:
  FiniteSpace space_;
  std::vector<Index> members_;
};

// Total function between the atom sets of two spaces.
class MeasurableMap {
 public:
  MeasurableMap(FiniteSpace source, FiniteSpace target, std::vector<Index> assignment)
      : source_(std::move(source)), target_(std::move(target)), assignment_(std::move(assignment)) {
    if (static_cast<Index>(assignment_.size()) != source_.size())
      throw Error(ErrorCode::InvalidArgument, "map must assign every source atom");
    for (Index t : assignment_)
      if (t < 0 || t >= target_.size()) throw Error(ErrorCode::UnknownAtom, "map image outside target");
  }

  static MeasurableMap from_labels(const FiniteSpace& source, const FiniteSpace& target,
                                   const std::unordered_map<std::string, std::string>& assign) {
    std::vector<Index> a(static_cast<std::size_t>(source.size()));
    for (Index i = 0; i < source.size(); ++i) {
      auto it = assign.find(source.label(i));
      if (it == assign.end())
        throw Error(ErrorCode::InvalidArgument, "map leaves atom '" + source.label(i) + "' unassigned");
      a[static_cast<std::size_t>(i)] = target.index_of(it->second);
    }
    return MeasurableMap(source, target, std::move(a));
  }

  static MeasurableMap identity(const FiniteSpace& space) {
    std::vector<Index> a(static_cast<std::size_t>(space.size()));
    for (Index i = 0; i < space.size(); ++i) a[static_cast<std::size_t>(i)] = i;
    return MeasurableMap(space, space, std::move(a));
  }

  static MeasurableMap constant(const FiniteSpace& source, const FiniteSpace& target, Index value) {
    return MeasurableMap(source, target, std::vector<Index>(static_cast<std::size_t>(source.size()), value));
  }

  const FiniteSpace& source() const { return source_; }
  const FiniteSpace& target() const { return target_; }
  const std::vector<Index>& assignment() const { return assignment_; }
  Index operator()(Index atom) const { return assignment_.at(static_cast<std::size_t>(atom)); }

  bool is_surjective() const {
    std::vector<bool> hit(static_cast<std::size_t>(target_.size()), false);
    for (Index t : assignment_) hit[static_cast<std::size_t>(t)] = true;
    return std::all_of(hit.begin(), hit.end(), [](bool h) { return h; });
  }

  // g after *this.
  MeasurableMap then(const MeasurableMap& g) const {
    require_same_space(target_, g.source_, "composed maps do not chain");
    std::vector<Index> a(assignment_.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = g(assignment_[i]);
    return MeasurableMap(source_, g.target_, std::move(a));
  }

 private:
  FiniteSpace source_;
  FiniteSpace target_;
  std::vector<Index> assignment_;
};

// Normalized representative of an information state: non-negative weights
// summing to one.
template <typename Scalar>
class BasicInformationState {
 public:
  using VectorType = Vector<Scalar>;

  // Normalizes on construction; see normalize().
  BasicInformationState(FiniteSpace space, const VectorType& raw_weights);

  const FiniteSpace& space() const { return space_; }
  const VectorType& weights() const { return weights_; }
  Scalar weight(Index i) const { return weights_(i); }
  Scalar weight(std::string_view label) const { return weights_(space_.index_of(label)); }

  Scalar probability(const Event& event) const {
    require_same_space(space_, event.space(), "event is not on the state's space");
    Scalar s(0);
    for (Index m : event.members()) s += weights_(m);
    return s;
  }

  bool is_pure(Scalar tol = Scalar(default_tolerances().weight)) const {
    return (weights_.array() >= Scalar(1) - tol).any();
  }

 private:
  FiniteSpace space_;
  VectorType weights_;
};

using InformationState = BasicInformationState<double>;

template <typename Scalar>
BasicInformationState<Scalar>::BasicInformationState(FiniteSpace space, const VectorType& raw_weights)
    : space_(std::move(space)) {
  if (raw_weights.size() != space_.size())
    throw Error(ErrorCode::SpaceMismatch, "weight vector length differs from the number of atoms");
  const Scalar tol(default_tolerances().weight);
  for (Index i = 0; i < raw_weights.size(); ++i) {
    if (!std::isfinite(static_cast<double>(raw_weights(i))))
      throw Error(ErrorCode::InvalidArgument, "non-finite weight");
    if (raw_weights(i) < -tol)
      throw Error(ErrorCode::NegativeWeight, "weight of '" + space_.label(i) + "' is negative");
  }
  VectorType w = raw_weights.cwiseMax(Scalar(0));
  const Scalar total = w.sum();
  if (total <= tol) throw Error(ErrorCode::ZeroMeasure, "weights sum to zero");
  // Already-normalized input is kept bit for bit so normalization is idempotent.
  if (std::abs(total - Scalar(1)) <= Scalar(8) * std::numeric_limits<Scalar>::epsilon())
    weights_ = std::move(w);
  else
    weights_ = w / total;
}

template <typename Scalar>
BasicInformationState<Scalar> normalize(const Vector<Scalar>& raw_weights, const FiniteSpace& space) {
  return BasicInformationState<Scalar>(space, raw_weights);
}

template <typename Scalar = double>
BasicInformationState<Scalar> dirac(const FiniteSpace& space, std::string_view atom) {
  Vector<Scalar> w = Vector<Scalar>::Zero(space.size());
  w(space.index_of(atom)) = Scalar(1);
  return BasicInformationState<Scalar>(space, w);
}

template <typename Scalar = double>
BasicInformationState<Scalar> dirac(const FiniteSpace& space, Index atom) {
  if (atom < 0 || atom >= space.size()) throw Error(ErrorCode::UnknownAtom, "atom index out of range");
  Vector<Scalar> w = Vector<Scalar>::Zero(space.size());
  w(atom) = Scalar(1);
  return BasicInformationState<Scalar>(space, w);
}

template <typename Scalar = double>
BasicInformationState<Scalar> uniform(const FiniteSpace& space) {
  return BasicInformationState<Scalar>(space, Vector<Scalar>::Ones(space.size()));
}

// Convex combination sum_i c_i * states_i.
template <typename Scalar>
BasicInformationState<Scalar> mix(std::span<const BasicInformationState<Scalar>> states,
                                  std::span<const Scalar> coefficients) {
  if (states.empty() || states.size() != coefficients.size())
    throw Error(ErrorCode::BadCoefficients, "need one coefficient per state");
  const Scalar tol(default_tolerances().weight);
  Scalar total(0);
  for (Scalar c : coefficients) {
    if (c < -tol) throw Error(ErrorCode::BadCoefficients, "negative mixing coefficient");
    total += c;
  }
  if (std::abs(total - Scalar(1)) > tol) throw Error(ErrorCode::BadCoefficients, "coefficients do not sum to 1");
  const FiniteSpace& space = states.front().space();
  Vector<Scalar> w = Vector<Scalar>::Zero(space.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    require_same_space(space, states[i].space(), "mixed states live on different spaces");
    w += std::max(coefficients[i], Scalar(0)) * states[i].weights();
  }
  return BasicInformationState<Scalar>(space, w);
}

template <typename Scalar>
BasicInformationState<Scalar> mix(const std::vector<BasicInformationState<Scalar>>& states,
                                  const std::vector<Scalar>& coefficients) {
  return mix(std::span<const BasicInformationState<Scalar>>(states), std::span<const Scalar>(coefficients));
}

// Two-state mixture alpha * a + (1 - alpha) * b.
template <typename Scalar>
BasicInformationState<Scalar> mix(const BasicInformationState<Scalar>& a, const BasicInformationState<Scalar>& b,
                                  Scalar alpha) {
  return mix(std::vector<BasicInformationState<Scalar>>{a, b}, std::vector<Scalar>{alpha, Scalar(1) - alpha});
}

// Image measure: weight at t is the state's mass on the preimage of t.
template <typename Scalar>
BasicInformationState<Scalar> pushforward(const BasicInformationState<Scalar>& state, const MeasurableMap& map) {
  require_same_space(state.space(), map.source(), "pushforward: state is not on the map's source");
  Vector<Scalar> w = Vector<Scalar>::Zero(map.target().size());
  for (Index i = 0; i < state.space().size(); ++i) w(map(i)) += state.weight(i);
  return BasicInformationState<Scalar>(map.target(), w);
}

template <typename Scalar>
Scalar total_variation(const BasicInformationState<Scalar>& a, const BasicInformationState<Scalar>& b) {
  require_same_space(a.space(), b.space(), "total variation between different spaces");
  return Scalar(0.5) * (a.weights() - b.weights()).cwiseAbs().sum();
}

// Unnormalized measure with total mass in [0, 1], e.g. an instrument value.
template <typename Scalar>
class BasicSubMeasure {
 public:
  BasicSubMeasure(FiniteSpace space, Vector<Scalar> weights) : space_(std::move(space)), weights_(std::move(weights)) {
    if (weights_.size() != space_.size()) throw Error(ErrorCode::SpaceMismatch, "submeasure length mismatch");
    const Scalar tol(default_tolerances().weight);
    if ((weights_.array() < -tol).any()) throw Error(ErrorCode::NegativeWeight, "submeasure has negative mass");
    weights_ = weights_.cwiseMax(Scalar(0));
    total_ = weights_.sum();
    if (total_ > Scalar(1) + tol) throw Error(ErrorCode::InvalidArgument, "submeasure total exceeds 1");
  }

  const FiniteSpace& space() const { return space_; }
  const Vector<Scalar>& weights() const { return weights_; }
  Scalar total() const { return total_; }

  // Always divides by the total, so a single surviving atom gets weight exactly 1.
  BasicInformationState<Scalar> normalized() const {
    if (total_ <= Scalar(0)) throw Error(ErrorCode::ZeroMeasure, "submeasure has zero mass");
    return BasicInformationState<Scalar>(space_, Vector<Scalar>(weights_ / total_));
  }

 private:
  FiniteSpace space_;
  Vector<Scalar> weights_;
  Scalar total_{};
};

using SubMeasure = BasicSubMeasure<double>;

}  // namespace gpf
