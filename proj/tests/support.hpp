#pragma once

// Random instance generators for property tests. Everything is driven by
// std::mt19937_64 with explicit seeds so failures replay exactly.

#include <complex>
#include <random>
#include <string>
#include <vector>

#include "gpf/experiments.hpp"
#include "gpf/quantum.hpp"

namespace gpf::testing {

using Rng = std::mt19937_64;
using cd = std::complex<double>;
using CMat = ComplexMatrix<double>;
using CVec = ComplexVector<double>;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline FiniteSpace labelled_space(const std::string& prefix, int n) {
  std::vector<std::string> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back(prefix + std::to_string(i));
  return FiniteSpace(atoms);
}

// Strictly positive or sparse weights; sparse vectors keep at least one atom.
inline Vector<double> random_weights(Rng& rng, Index n, bool allow_zeros = true) {
  Vector<double> w(n);
  for (Index i = 0; i < n; ++i) {
    w(i) = -std::log(1.0 - uniform01(rng));
    if (allow_zeros && uniform01(rng) < 0.2) w(i) = 0.0;
  }
  if (w.sum() == 0.0) w(uniform_int(rng, 0, static_cast<int>(n) - 1)) = 1.0;
  return w / w.sum();
}

inline InformationState random_state(Rng& rng, const FiniteSpace& space, bool allow_zeros = true) {
  return InformationState(space, random_weights(rng, space.size(), allow_zeros));
}

inline Kernel random_kernel(Rng& rng, const FiniteSpace& in, const FiniteSpace& out) {
  Matrix<double> m(in.size(), out.size());
  for (Index r = 0; r < in.size(); ++r) m.row(r) = random_weights(rng, out.size()).transpose();
  return Kernel(in, out, m);
}

inline MeasurableMap random_map(Rng& rng, const FiniteSpace& from, const FiniteSpace& to) {
  std::vector<Index> a;
  for (Index i = 0; i < from.size(); ++i) a.push_back(uniform_int(rng, 0, static_cast<int>(to.size()) - 1));
  return MeasurableMap(from, to, a);
}

inline std::vector<Event> all_events(const FiniteSpace& space) {
  std::vector<Event> events;
  const Index n = space.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Index> m;
    for (Index i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) m.push_back(i);
    events.emplace_back(space, m);
  }
  return events;
}

inline CMat random_complex(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> n;
  CMat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = cd(n(rng), n(rng));
  return m;
}

inline CMat random_psd(Rng& rng, Index dim, bool full_rank = false) {
  const CMat g = random_complex(rng, dim, full_rank ? dim : uniform_int(rng, 1, static_cast<int>(dim)));
  return g * g.adjoint();
}

inline DensityMatrix random_density(Rng& rng, Index dim) {
  CMat m = random_psd(rng, dim);
  m /= m.trace().real();
  return DensityMatrix((m + m.adjoint()) / 2.0);
}

inline PureState random_pure(Rng& rng, Index dim) { return PureState(random_complex(rng, dim, 1).col(0)); }

inline CMat inverse_sqrt(const CMat& s) {
  Eigen::SelfAdjointEigenSolver<CMat> es(s);
  const Vector<double> d = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
}

// A[k][j] = S^{-1/2} G_kj S^{-1/2} with G_kj PSD and S = sum G_kj.
inline QuantumExtendedObservable random_qeo(Rng& rng, Index d_in, Index d_out, int outcomes, int prepared) {
  std::vector<std::vector<CMat>> g(static_cast<std::size_t>(outcomes));
  CMat s = CMat::Zero(d_in, d_in);
  for (auto& row : g)
    for (int j = 0; j < prepared; ++j) {
      row.push_back(random_psd(rng, d_in, true));
      s += row.back();
    }
  const CMat r = inverse_sqrt(s);
  for (auto& row : g)
    for (auto& a : row) {
      a = r * a * r;
      a = (a + a.adjoint()) / 2.0;
    }
  std::vector<PureState> p;
  for (int j = 0; j < prepared; ++j) p.push_back(random_pure(rng, d_out));
  return QuantumExtendedObservable(labelled_space("w", outcomes), p, g);
}

inline CMat ket_projector(std::initializer_list<cd> amplitudes) {
  CVec v(static_cast<Index>(amplitudes.size()));
  Index i = 0;
  for (cd a : amplitudes) v(i++) = a;
  v.normalize();
  return v * v.adjoint();
}

inline POVM z_pvm() {
  return POVM(FiniteSpace({"0", "1"}), {ket_projector({1.0, 0.0}), ket_projector({0.0, 1.0})});
}

// Von Neumann measurement in the Z basis followed by preparation of the
// recorded eigenstate.
inline QuantumExtendedObservable collapse_qeo() {
  const CMat p0 = ket_projector({1.0, 0.0});
  const CMat p1 = ket_projector({0.0, 1.0});
  const CMat z = CMat::Zero(2, 2);
  return QuantumExtendedObservable(FiniteSpace({"0", "1"}), {PureState::basis(2, 0), PureState::basis(2, 1)},
                                   {{p0, z}, {z, p1}});
}

inline DensityMatrix plus_density() { return DensityMatrix(ket_projector({1.0, 1.0})); }

inline FiniteSpace four_atoms() { return FiniteSpace({"1", "2", "3", "4"}); }

inline MeasurableMap parity_map() {
  return MeasurableMap::from_labels(four_atoms(), FiniteSpace({"odd", "even"}),
                                    {{"1", "odd"}, {"2", "even"}, {"3", "odd"}, {"4", "even"}});
}

}  // namespace gpf::testing
