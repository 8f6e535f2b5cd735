#include "pcsid/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "pcsid/errors.hpp"
#include "pcsid/quadrature.hpp"
#include "point_jets.hpp"

namespace pcsid {

namespace {

constexpr std::array<const char*, 4> kKindNames{"kinetic_translational", "kinetic_rotational", "gravitational",
                                                "elastic"};

bool per_segment(BasisKind kind) { return kind != BasisKind::Elastic; }

void check_state(const BasisLibrary& lib, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != lib.num_coordinates()) {
    std::ostringstream msg;
    msg << "basis: " << what << " has " << v.size() << " entries, expected " << lib.num_coordinates();
    throw DimensionMismatchError(msg.str());
  }
}

// Random state with masked entries zeroed; scales are per strain kind.
struct StateScales {
  double bending, linear;
};

Eigen::VectorXd random_state(std::mt19937_64& rng, const StrainMask& mask, StateScales scales) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(mask.size());
  for (int i = 0; i < mask.size(); ++i) {
    const double scale = strain_kind_of(i) == StrainKind::Bending ? scales.bending : scales.linear;
    v[i] = mask.is_active(i) ? scale * u(rng) : 0.0;
  }
  return v;
}

}  // namespace

std::string to_string(BasisKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

BasisKind basis_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (name == kKindNames[i]) {
      return static_cast<BasisKind>(i);
    }
  }
  throw InvalidArgumentError("unknown basis kind: " + name);
}

std::string BasisDescriptor::label() const {
  std::ostringstream out;
  out << to_string(kind) << '[' << index << ']';
  return out.str();
}

const char* BasisDescriptor::unit() const {
  switch (kind) {
    case BasisKind::KineticTranslational:
      return "kg/m";
    case BasisKind::KineticRotational:
      return "kg m";
    case BasisKind::Gravitational:
      return "N/m";
    case BasisKind::Elastic:
      switch (strain_kind_of(index)) {
        case StrainKind::Bending:
          return "N m^2";
        default:
          return "N";
      }
  }
  return "";
}

BasisLibrary::BasisLibrary(RobotGeometry geometry, StrainMask mask, std::vector<BasisDescriptor> descriptors)
    : geometry_(std::move(geometry)), mask_(std::move(mask)), descriptors_(std::move(descriptors)) {
  if (mask_.size() != geometry_.num_coordinates()) {
    throw DimensionMismatchError("BasisLibrary: mask size does not match geometry");
  }
  if (mask_.num_active() == 0) {
    throw InvalidMaskError("BasisLibrary: no active coordinate");
  }
  for (const BasisDescriptor& d : descriptors_) {
    const int bound = per_segment(d.kind) ? geometry_.num_segments() : geometry_.num_coordinates();
    if (d.index < 0 || d.index >= bound) {
      throw OutOfRangeError("BasisLibrary: descriptor index out of range: " + d.label());
    }
    if (std::count(descriptors_.begin(), descriptors_.end(), d) != 1) {
      throw InvalidArgumentError("BasisLibrary: duplicate descriptor " + d.label());
    }
  }
  damping_ = mask_.active_indices();
}

int BasisLibrary::find(BasisKind kind, int index) const {
  for (int j = 0; j < num_functions(); ++j) {
    if (descriptors_[static_cast<std::size_t>(j)] == BasisDescriptor{kind, index}) {
      return j;
    }
  }
  return -1;
}

int BasisLibrary::find_damping(int coordinate) const {
  const auto it = std::find(damping_.begin(), damping_.end(), coordinate);
  return it == damping_.end() ? -1 : num_functions() + static_cast<int>(it - damping_.begin());
}

std::string BasisLibrary::coefficient_label(int j) const {
  if (j < 0 || j >= size()) {
    throw OutOfRangeError("BasisLibrary: coefficient index out of range");
  }
  if (j < num_functions()) {
    return descriptors_[static_cast<std::size_t>(j)].label();
  }
  std::ostringstream out;
  out << "damping[" << damping_[static_cast<std::size_t>(j - num_functions())] << ']';
  return out.str();
}

BasisLibrary build_library(const RobotGeometry& geometry, const StrainMask& mask) {
  if (mask.size() != geometry.num_coordinates()) {
    throw DimensionMismatchError("build_library: mask size does not match geometry");
  }
  if (mask.num_active() == 0) {
    throw InvalidMaskError("build_library: no active coordinate");
  }
  std::vector<BasisDescriptor> d;
  for (int i = 0; i < geometry.num_segments(); ++i) {
    d.push_back({BasisKind::KineticTranslational, i});
    d.push_back({BasisKind::KineticRotational, i});
    d.push_back({BasisKind::Gravitational, i});
  }
  for (int e : mask.active_indices()) {
    d.push_back({BasisKind::Elastic, e});
  }
  return BasisLibrary(geometry, mask, std::move(d));
}

namespace {

struct SegmentRows {
  std::vector<int> ta, tr, g;
};

SegmentRows segment_rows(const BasisLibrary& lib) {
  const auto ns = static_cast<std::size_t>(lib.geometry().num_segments());
  SegmentRows r{std::vector<int>(ns, -1), std::vector<int>(ns, -1), std::vector<int>(ns, -1)};
  for (int j = 0; j < lib.num_functions(); ++j) {
    const BasisDescriptor& d = lib.descriptors()[static_cast<std::size_t>(j)];
    const auto i = static_cast<std::size_t>(d.index);
    switch (d.kind) {
      case BasisKind::KineticTranslational: r.ta[i] = j; break;
      case BasisKind::KineticRotational: r.tr[i] = j; break;
      case BasisKind::Gravitational: r.g[i] = j; break;
      case BasisKind::Elastic: break;
    }
  }
  return r;
}

}  // namespace

Eigen::VectorXd eval_lagrangian_basis(const BasisLibrary& lib, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  check_state(lib, q, "q");
  check_state(lib, qd, "qd");
  const SegmentRows rows = segment_rows(lib);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(lib.num_functions());
  detail::PointEvaluator ev(lib.geometry(), lib.mask());
  detail::PointJets jets;
  for (const QuadraturePoint& p : backbone_quadrature(lib.geometry())) {
    ev.jets(q, qd, p.s, jets);
    const auto i = static_cast<std::size_t>(p.segment);
    if (rows.ta[i] >= 0) f[rows.ta[i]] += 0.5 * p.weight * jets.velocity.head<2>().squaredNorm();
    if (rows.tr[i] >= 0) f[rows.tr[i]] += 0.5 * p.weight * jets.velocity[2] * jets.velocity[2];
    if (rows.g[i] >= 0) f[rows.g[i]] -= p.weight * jets.pose[1];
  }
  for (int j = 0; j < lib.num_functions(); ++j) {
    const BasisDescriptor& d = lib.descriptors()[static_cast<std::size_t>(j)];
    if (d.kind == BasisKind::Elastic && lib.mask().is_active(d.index)) {
      f[j] = -0.5 * q[d.index] * q[d.index];
    }
  }
  return f;
}

double eval_lagrangian(const BasisLibrary& lib, const Eigen::VectorXd& coefficients, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd) {
  if (coefficients.size() != lib.size()) {
    throw DimensionMismatchError("eval_lagrangian: coefficient count does not match the library");
  }
  return coefficients.head(lib.num_functions()).dot(eval_lagrangian_basis(lib, q, qd));
}

void eval_eom_basis(const BasisLibrary& lib, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                    const Eigen::VectorXd& qdd, Eigen::Ref<Eigen::MatrixXd> out) {
  check_state(lib, q, "q");
  check_state(lib, qd, "qd");
  check_state(lib, qdd, "qdd");
  if (out.rows() != lib.size() || out.cols() != lib.num_coordinates()) {
    throw DimensionMismatchError("eval_eom_basis: output block has the wrong shape");
  }
  out.setZero();
  const SegmentRows rows = segment_rows(lib);
  const std::vector<int>& active = lib.damping_coordinates();
  const auto na = static_cast<Eigen::Index>(active.size());
  Eigen::VectorXd qd_a(na), qdd_a(na);
  for (Eigen::Index a = 0; a < na; ++a) {
    qd_a[a] = qd[active[static_cast<std::size_t>(a)]];
    qdd_a[a] = qdd[active[static_cast<std::size_t>(a)]];
  }
  detail::PointEvaluator ev(lib.geometry(), lib.mask());
  detail::PointJets jets;
  Eigen::VectorXd acc_rows(na);
  for (const QuadraturePoint& p : backbone_quadrature(lib.geometry())) {
    ev.jets(q, qd, p.s, jets);
    const Eigen::Index c = jets.columns;
    if (c == 0) {
      continue;
    }
    const auto i = static_cast<std::size_t>(p.segment);
    const auto jac = jets.jac.leftCols(c);
    // Point acceleration J qdd + Jdot qd.
    const Eigen::Vector3d acc = jac * qdd_a.head(c) + jets.jac_rate.leftCols(c) * qd_a.head(c);
    auto scatter = [&](int row, const Eigen::VectorXd& values) {
      for (Eigen::Index a = 0; a < c; ++a) {
        out(row, active[static_cast<std::size_t>(a)]) += values[a];
      }
    };
    if (rows.ta[i] >= 0) scatter(rows.ta[i], p.weight * (jac.topRows<2>().transpose() * acc.head<2>()));
    if (rows.tr[i] >= 0) scatter(rows.tr[i], p.weight * acc[2] * jac.row(2).transpose());
    if (rows.g[i] >= 0) scatter(rows.g[i], p.weight * jac.row(1).transpose());
  }
  for (int j = 0; j < lib.num_functions(); ++j) {
    const BasisDescriptor& d = lib.descriptors()[static_cast<std::size_t>(j)];
    if (d.kind == BasisKind::Elastic && lib.mask().is_active(d.index)) {
      out(j, d.index) = q[d.index];
    }
  }
  for (int k = 0; k < lib.num_damping(); ++k) {
    const int e = active[static_cast<std::size_t>(k)];
    out(lib.num_functions() + k, e) = qd[e];
  }
}

Eigen::MatrixXd eval_eom_basis(const BasisLibrary& lib, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                               const Eigen::VectorXd& qdd) {
  Eigen::MatrixXd out(lib.size(), lib.num_coordinates());
  eval_eom_basis(lib, q, qd, qdd, out);
  return out;
}

BasisLibrary reduce_library(const BasisLibrary& lib, int coordinate, const ProbeOptions& probe) {
  if (coordinate < 0 || coordinate >= lib.num_coordinates()) {
    throw OutOfRangeError("reduce_library: coordinate index out of range");
  }
  const StrainMask mask = lib.mask().without(coordinate);
  const BasisLibrary candidate(lib.geometry(), mask, lib.descriptors());
  Eigen::VectorXd row_max = Eigen::VectorXd::Zero(candidate.num_functions());
  std::mt19937_64 rng(probe.seed);
  Eigen::MatrixXd psi(candidate.size(), candidate.num_coordinates());
  for (int k = 0; k < probe.states; ++k) {
    const Eigen::VectorXd q = random_state(rng, mask, {10.0, 0.2});
    const Eigen::VectorXd qd = random_state(rng, mask, {50.0, 1.0});
    const Eigen::VectorXd qdd = random_state(rng, mask, {500.0, 10.0});
    eval_eom_basis(candidate, q, qd, qdd, psi);
    row_max = row_max.cwiseMax(psi.topRows(candidate.num_functions()).cwiseAbs().rowwise().maxCoeff());
  }
  std::vector<BasisDescriptor> kept;
  for (int j = 0; j < candidate.num_functions(); ++j) {
    if (row_max[j] > probe.zero_tolerance) {
      kept.push_back(candidate.descriptors()[static_cast<std::size_t>(j)]);
    }
  }
  return BasisLibrary(lib.geometry(), mask, std::move(kept));
}

namespace {

// Five-point central difference of a scalar function at 0.
template <class F>
double central5(F&& f, double h) {
  return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
}

}  // namespace

double derivative_selfcheck(const BasisLibrary& lib, int trials, std::uint64_t seed) {
  if (trials < 1) {
    throw InvalidArgumentError("derivative_selfcheck: need at least one trial");
  }
  std::mt19937_64 rng(seed);
  const std::vector<int>& active = lib.damping_coordinates();
  const int nf = lib.num_functions();
  constexpr double hv = 1e-2;  // f is at most quadratic in qd
  constexpr double ht = 1e-3;
  constexpr double hq = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::VectorXd q = random_state(rng, lib.mask(), {10.0, 0.1});
    const Eigen::VectorXd qd = random_state(rng, lib.mask(), {2.0, 0.2});
    const Eigen::VectorXd qdd = random_state(rng, lib.mask(), {20.0, 2.0});
    const Eigen::MatrixXd psi = eval_eom_basis(lib, q, qd, qdd);
    Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(lib.size(), lib.num_coordinates());
    for (int e : active) {
      // d/dt of df/dqd_e along q(t) = q + t qd + t^2/2 qdd, qd(t) = qd + t qdd.
      for (int j = 0; j < nf; ++j) {
        auto momentum = [&](double t) {
          const Eigen::VectorXd qt = q + t * qd + 0.5 * t * t * qdd;
          const Eigen::VectorXd vt = qd + t * qdd;
          return central5(
              [&](double h) {
                Eigen::VectorXd v = vt;
                v[e] += h;
                return eval_lagrangian_basis(lib, qt, v)[j];
              },
              hv);
        };
        const double ddt = central5(momentum, ht);
        const double dq = central5(
            [&](double h) {
              Eigen::VectorXd x = q;
              x[e] += h * (strain_kind_of(e) == StrainKind::Bending ? 10.0 : 1.0);
              return eval_lagrangian_basis(lib, x, qd)[j];
            },
            hq) / (strain_kind_of(e) == StrainKind::Bending ? 10.0 : 1.0);
        fd(j, e) = ddt - dq;
      }
      for (int k = 0; k < lib.num_damping(); ++k) {
        fd(nf + k, e) = active[static_cast<std::size_t>(k)] == e ? qd[e] : 0.0;
      }
    }
    for (int j = 0; j < lib.size(); ++j) {
      const double scale = psi.row(j).cwiseAbs().maxCoeff();
      const double err = (psi.row(j) - fd.row(j)).cwiseAbs().maxCoeff();
      worst = std::max(worst, err / (scale + 1e-12));
    }
  }
  return worst;
}

Eigen::VectorXd model_coefficients(const BasisLibrary& lib, const PcsModel& model) {
  model.validate();
  if (model.num_coordinates() != lib.num_coordinates()) {
    throw DimensionMismatchError("model_coefficients: model and library differ in size");
  }
  Eigen::VectorXd pi(lib.size());
  for (int j = 0; j < lib.num_functions(); ++j) {
    const BasisDescriptor& d = lib.descriptors()[static_cast<std::size_t>(j)];
    const auto i = static_cast<std::size_t>(d.index);
    switch (d.kind) {
      case BasisKind::KineticTranslational: pi[j] = model.rho_a[i]; break;
      case BasisKind::KineticRotational: pi[j] = model.rho_i[i]; break;
      case BasisKind::Gravitational: pi[j] = model.gravity_weight[i]; break;
      case BasisKind::Elastic: pi[j] = model.stiffness[d.index]; break;
    }
  }
  for (int k = 0; k < lib.num_damping(); ++k) {
    pi[lib.num_functions() + k] = model.damping[lib.damping_coordinates()[static_cast<std::size_t>(k)]];
  }
  return pi;
}

PcsModel model_from_coefficients(const BasisLibrary& lib, const Eigen::VectorXd& coefficients) {
  if (coefficients.size() != lib.size()) {
    throw DimensionMismatchError("model_from_coefficients: coefficient count does not match the library");
  }
  PcsModel m;
  m.geometry = lib.geometry();
  const auto ns = static_cast<std::size_t>(lib.geometry().num_segments());
  m.rho_a.assign(ns, 0.0);
  m.rho_i.assign(ns, 0.0);
  m.gravity_weight.assign(ns, 0.0);
  m.stiffness = Eigen::VectorXd::Zero(lib.num_coordinates());
  m.damping = Eigen::VectorXd::Zero(lib.num_coordinates());
  m.mask = lib.mask();
  for (int j = 0; j < lib.num_functions(); ++j) {
    const BasisDescriptor& d = lib.descriptors()[static_cast<std::size_t>(j)];
    const auto i = static_cast<std::size_t>(d.index);
    switch (d.kind) {
      case BasisKind::KineticTranslational: m.rho_a[i] = coefficients[j]; break;
      case BasisKind::KineticRotational: m.rho_i[i] = coefficients[j]; break;
      case BasisKind::Gravitational: m.gravity_weight[i] = coefficients[j]; break;
      case BasisKind::Elastic: m.stiffness[d.index] = coefficients[j]; break;
    }
  }
  for (int k = 0; k < lib.num_damping(); ++k) {
    m.damping[lib.damping_coordinates()[static_cast<std::size_t>(k)]] = coefficients[lib.num_functions() + k];
  }
  return m;
}

}  // namespace pcsid
