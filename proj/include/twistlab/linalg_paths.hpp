#pragma once

#include <algorithm>
#include <complex>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/matrix_ops.hpp"

namespace twistlab {

/// Commuting pair (a, c) in GL+(n). `tol` bounds the accepted commutation
/// residual in the entrywise max norm.
struct CommutingPair {
  Matrix a;
  Matrix c;
  double tol = 1e-10;

  int n() const { return static_cast<int>(a.rows()); }
};

/// Orientation (det > 0) is checked only where a construction needs it:
/// eigenstructure and parity are well-defined for any commuting pair.
inline void validate_pair(const CommutingPair& pair, bool require_orientation = false) {
  if (pair.a.rows() != pair.a.cols() || pair.c.rows() != pair.c.cols() ||
      pair.a.rows() != pair.c.rows()) {
    throw Error(ErrorCode::ConfigError, "pair matrices must be square of equal size");
  }
  if (!all_finite(pair.a) || !all_finite(pair.c)) {
    throw Error(ErrorCode::ConfigError, "pair entries must be finite");
  }
  double res = commutation_residual(pair.a, pair.c);
  if (res > pair.tol) {
    throw Error(ErrorCode::NonCommuting,
                "commutation residual " + std::to_string(res) + " exceeds tol");
  }
  if (require_orientation &&
      (pair.a.determinant() <= 0.0 || pair.c.determinant() <= 0.0)) {
    throw Error(ErrorCode::ConfigError, "pair must be orientation-preserving (det > 0)");
  }
}

/// One common block: a joint generalized eigenspace with its eigenvalue
/// pair. Complex eigenvalues are recorded with nonnegative imaginary part;
/// `dim` is the real dimension (conjugate pairs are kept together).
struct EigenBlock {
  std::complex<double> lambda_a;
  std::complex<double> lambda_c;
  Matrix basis;  // n x dim, orthonormal columns
  int dim = 0;
};

struct EigenStructure {
  int n = 0;
  std::vector<EigenBlock> blocks;
  double invariance_residual = 0.0;  // max over blocks and both matrices
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int x, int y) { parent[find(x)] = find(y); }
};

/// Cluster eigenvalues at distance `tol`, closing each cluster under
/// conjugation. Returns a cluster label per eigenvalue.
inline std::vector<int> cluster_eigenvalues(const CVector& vals, double tol) {
  const int n = static_cast<int>(vals.size());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(vals[i] - vals[j]) <= tol) uf.unite(i, j);
      if (std::abs(vals[i] - std::conj(vals[j])) <= tol) uf.unite(i, j);
    }
  }
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[i] = uf.find(i);
  return label;
}

inline std::vector<std::vector<int>> partition_of(const std::vector<int>& label) {
  std::vector<std::vector<int>> groups;
  std::vector<int> roots;
  for (int i = 0; i < static_cast<int>(label.size()); ++i) {
    auto it = std::find(roots.begin(), roots.end(), label[i]);
    if (it == roots.end()) {
      roots.push_back(label[i]);
      groups.push_back({i});
    } else {
      groups[static_cast<std::size_t>(it - roots.begin())].push_back(i);
    }
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end());
  return groups;
}

/// Real matrix p(M) for p the product of (x - lambda) over a
/// conjugate-closed cluster; its kernel is the generalized eigenspace.
inline Matrix cluster_annihilator(const Matrix& m,
                                  const std::vector<std::complex<double>>& cluster) {
  const int n = static_cast<int>(m.rows());
  Matrix acc = Matrix::Identity(n, n);
  std::vector<std::complex<double>> rest = cluster;
  const double im_tol = 1e-12;
  while (!rest.empty()) {
    std::complex<double> lam = rest.back();
    rest.pop_back();
    if (std::abs(lam.imag()) <= im_tol) {
      acc = acc * (m - lam.real() * Matrix::Identity(n, n));
      continue;
    }
    auto it = std::min_element(rest.begin(), rest.end(), [&](auto u, auto v) {
      return std::abs(u - std::conj(lam)) < std::abs(v - std::conj(lam));
    });
    if (it != rest.end() && std::abs(*it - std::conj(lam)) < 1e-6) {
      std::complex<double> mu = *it;
      rest.erase(it);
      acc = acc * (m * m - (lam.real() + mu.real()) * m +
                   (lam * mu).real() * Matrix::Identity(n, n));
    } else {
      acc = acc * (m * m - 2.0 * lam.real() * m + std::norm(lam) * Matrix::Identity(n, n));
    }
  }
  return acc;
}

/// Orthonormal basis of the k-dimensional near-kernel of `a`, with column
/// signs canonicalized for reproducibility.
inline Matrix kernel_basis(const Matrix& a, int k) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  Matrix v = svd.matrixV().rightCols(k);
  for (int c = 0; c < v.cols(); ++c) {
    int imax = 0;
    for (int r = 1; r < v.rows(); ++r)
      if (std::abs(v(r, c)) > std::abs(v(imax, c))) imax = r;
    if (v(imax, c) < 0.0) v.col(c) = -v.col(c);
  }
  return v;
}

struct Cluster {
  std::complex<double> rep;  // mean with imaginary parts folded to >= 0
  std::vector<std::complex<double>> members;
};

inline std::vector<Cluster> collect_clusters(const CVector& vals, const std::vector<int>& label) {
  std::vector<Cluster> out;
  std::vector<int> roots;
  const int n = static_cast<int>(vals.size());
  for (int i = 0; i < n; ++i) {
    auto it = std::find(roots.begin(), roots.end(), label[i]);
    std::size_t idx;
    if (it == roots.end()) {
      roots.push_back(label[i]);
      out.push_back({});
      idx = out.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - roots.begin());
    }
    out[idx].members.push_back(vals[i]);
  }
  for (auto& c : out) {
    std::complex<double> mean(0, 0);
    for (auto& v : c.members) mean += std::complex<double>(v.real(), std::abs(v.imag()));
    mean /= static_cast<double>(c.members.size());
    c.rep = mean;
  }
  std::sort(out.begin(), out.end(), [](const Cluster& x, const Cluster& y) {
    if (x.rep.real() != y.rep.real()) return x.rep.real() < y.rep.real();
    return x.rep.imag() < y.rep.imag();
  });
  return out;
}

inline std::vector<Cluster> clusters_checked(const CVector& vals, double tol) {
  auto l1 = cluster_eigenvalues(vals, tol);
  auto l2 = cluster_eigenvalues(vals, tol / 2.0);
  if (partition_of(l1) != partition_of(l2)) {
    throw Error(ErrorCode::ClusterAmbiguity,
                "eigenvalue clusterings at tol and tol/2 disagree");
  }
  return collect_clusters(vals, l1);
}

}  // namespace detail

/// Common refinement of the generalized eigenspace decompositions of a
/// commuting pair. Eigenvalues within cluster_tol merge into one block; a
/// nonpositive cluster_tol selects the default 1e-7 * spectral radius.
inline EigenStructure common_eigenstructure(const CommutingPair& pair, double cluster_tol = 0.0) {
  validate_pair(pair);
  const int n = pair.n();

  Eigen::EigenSolver<Matrix> es_a(pair.a);
  CVector vals_a = es_a.eigenvalues();
  Eigen::EigenSolver<Matrix> es_c(pair.c);
  if (cluster_tol <= 0.0) {
    double rho = std::max({vals_a.cwiseAbs().maxCoeff(),
                           es_c.eigenvalues().cwiseAbs().maxCoeff(), 1.0});
    cluster_tol = 1e-7 * rho;
  }

  auto clusters_a = detail::clusters_checked(vals_a, cluster_tol);

  EigenStructure out;
  out.n = n;
  for (const auto& ca : clusters_a) {
    Matrix pa = detail::cluster_annihilator(pair.a, ca.members);
    Matrix va = detail::kernel_basis(pa, static_cast<int>(ca.members.size()));
    Matrix c_sub = va.transpose() * pair.c * va;
    Eigen::EigenSolver<Matrix> es_sub(c_sub);
    auto clusters_c = detail::clusters_checked(es_sub.eigenvalues(), cluster_tol);
    for (const auto& cc : clusters_c) {
      Matrix pc = detail::cluster_annihilator(c_sub, cc.members);
      Matrix w = detail::kernel_basis(pc, static_cast<int>(cc.members.size()));
      EigenBlock block;
      block.basis = va * w;
      block.dim = static_cast<int>(w.cols());
      block.lambda_a = ca.rep;
      block.lambda_c = cc.rep;
      out.blocks.push_back(block);
    }
  }

  int total = 0;
  double resid = 0.0;
  double scale = std::max({max_abs(pair.a), max_abs(pair.c), 1.0});
  for (const auto& b : out.blocks) {
    total += b.dim;
    Matrix ra = pair.a * b.basis - b.basis * (b.basis.transpose() * pair.a * b.basis);
    Matrix rc = pair.c * b.basis - b.basis * (b.basis.transpose() * pair.c * b.basis);
    resid = std::max({resid, max_abs(ra), max_abs(rc)});
  }
  out.invariance_residual = resid;
  if (total != n) {
    throw Error(ErrorCode::ClusterAmbiguity, "block dimensions do not sum to n");
  }
  if (resid > 1e-6 * scale) {
    throw Error(ErrorCode::ClusterAmbiguity,
                "subspace invariance residual too large: " + std::to_string(resid));
  }
  return out;
}

inline bool is_negative_real(std::complex<double> lambda, double tol) {
  return std::abs(lambda.imag()) <= tol && lambda.real() < -tol;
}

inline double default_negative_tol(const EigenStructure& es) {
  double rho = 1.0;
  for (const auto& b : es.blocks)
    rho = std::max({rho, std::abs(b.lambda_a), std::abs(b.lambda_c)});
  return 1e-7 * rho;
}

inline int negative_parity_of(const EigenStructure& es, double tol) {
  int dim = 0;
  for (const auto& b : es.blocks) {
    if (is_negative_real(b.lambda_a, tol) && is_negative_real(b.lambda_c, tol)) dim += b.dim;
  }
  return dim % 2;
}

/// Parity of the dimension of the maximal subspace on which all
/// generalized eigenvalues of both matrices are negative real.
inline int negative_parity(const CommutingPair& pair, double cluster_tol = 0.0) {
  EigenStructure es = common_eigenstructure(pair, cluster_tol);
  double tol = cluster_tol > 0.0 ? cluster_tol : default_negative_tol(es);
  return negative_parity_of(es, tol);
}

/// The canonical commuting pair (r_k^nu + I_{n-3}, r_i^nu + I_{n-3});
/// entries are exact integers.
inline CommutingPair canonical_pair(int n, int nu) {
  if (n < 3) throw Error(ErrorCode::DimensionTooSmall, "canonical_pair requires n >= 3");
  Matrix a = Matrix::Identity(n, n), c = Matrix::Identity(n, n);
  if (nu % 2 == 1) {
    a(0, 0) = -1.0;
    a(1, 1) = -1.0;
    c(1, 1) = -1.0;
    c(2, 2) = -1.0;
  }
  return {a, c, 1e-10};
}

struct StageLabel {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::string label;  // "S", "N", "O", "R" or custom
};

/// Path of matrices on [t0, t1]: closed-form evaluator plus a uniform
/// sample grid with a recorded Lipschitz bound (the continuity
/// certificate).
struct SampledPath {
  double t0 = 0.0, t1 = 1.0;
  std::vector<double> times;
  std::vector<Matrix> values;
  std::vector<StageLabel> stages;
  double lipschitz = 0.0;
  std::function<Matrix(double)> eval;

  int sample_count() const { return static_cast<int>(times.size()); }
};

inline SampledPath sample_path(const std::function<Matrix(double)>& eval, double t0, double t1,
                               int grid, std::vector<StageLabel> stages = {}) {
  SampledPath p;
  p.t0 = t0;
  p.t1 = t1;
  p.eval = eval;
  p.stages = std::move(stages);
  p.times.reserve(grid + 1);
  p.values.reserve(grid + 1);
  for (int m = 0; m <= grid; ++m) {
    double t = t0 + (t1 - t0) * (static_cast<double>(m) / grid);
    p.times.push_back(t);
    p.values.push_back(eval(t));
  }
  double lip = 0.0;
  for (int m = 0; m + 1 <= grid; ++m) {
    double dt = p.times[m + 1] - p.times[m];
    lip = std::max(lip, (p.values[m + 1] - p.values[m]).norm() / dt);
  }
  p.lipschitz = lip * (1.0 + 1e-9);
  return p;
}

namespace detail {

/// Semisimple part of a matrix whose spectrum is one conjugate-closed
/// cluster: Newton iteration on the square-free polynomial; exact in one
/// step for a real cluster.
inline Matrix semisimple_part(const Matrix& b, std::complex<double> lambda) {
  const int k = static_cast<int>(b.rows());
  if (std::abs(lambda.imag()) <= 1e-12) {
    return lambda.real() * Matrix::Identity(k, k);
  }
  double tr = 2.0 * lambda.real();
  double det = std::norm(lambda);
  Matrix s = b;
  for (int iter = 0; iter < 30; ++iter) {
    Matrix p = s * s - tr * s + det * Matrix::Identity(k, k);
    if (max_abs(p) < 1e-14 * std::max(1.0, max_abs(s))) break;
    Matrix dp = 2.0 * s - tr * Matrix::Identity(k, k);
    s = s - dp.partialPivLu().solve(p);
  }
  return s;
}

enum class SlotKind { RBlock, Rotation, Identity };

struct CanonicalSlot {
  SlotKind kind = SlotKind::Identity;
  int offset = 0;
  int size = 1;
  double theta_a = 0.0;
  double theta_c = 0.0;
};

struct RotPlane {
  Vector u, w;  // global coordinates of the invariant 2-plane
  double theta_a = 0.0, theta_c = 0.0;
};

struct SynthPlan {
  int n = 0;
  int nu = 0;
  Matrix v, v_inv;
  std::vector<Matrix> blk_a0, blk_c0;
  std::vector<Matrix> blk_sa, blk_sc;
  std::vector<double> scale_a, scale_c;
  Matrix off_a, off_c;
  Matrix a_unit, c_unit;
  Matrix b, log_q, p;
  std::vector<CanonicalSlot> slots;
  Matrix canon_a, canon_c;
};

inline Matrix assemble_block_diagonal(const SynthPlan& plan, const std::vector<Matrix>& blocks) {
  Matrix d = Matrix::Zero(plan.n, plan.n);
  int off = 0;
  for (const auto& blk : blocks) {
    int k = static_cast<int>(blk.rows());
    d.block(off, off, k, k) = blk;
    off += k;
  }
  return plan.v * d * plan.v_inv;
}

inline Matrix rotation2(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

/// Fold an angle into (-pi, pi], mapping -pi to +pi (ties at pi rotate
/// through the positive direction).
inline double fold_angle(double theta) {
  const double pi = 3.14159265358979323846264338327950288;
  while (theta > pi) theta -= 2.0 * pi;
  while (theta <= -pi + 1e-12) theta += 2.0 * pi;
  return theta;
}

/// Extract invariant 2-planes of a commuting unit-circle semisimple pair
/// restricted to one block, by simultaneous diagonalization over C.
/// Returns false when the shift parameter xi collided; the caller retries.
inline bool extract_rot_planes(const Matrix& ua, const Matrix& uc, double xi,
                               std::vector<RotPlane>& out) {
  const int dim = static_cast<int>(ua.rows());
  CMatrix g = ua.cast<std::complex<double>>() +
              std::complex<double>(xi, 0) * uc.cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<CMatrix> ces(g);
  if (ces.info() != Eigen::Success) return false;
  CMatrix vecs = ces.eigenvectors();
  CVector gvals = ces.eigenvalues();
  std::vector<int> picked;
  for (int j = 0; j < gvals.size(); ++j) {
    if (gvals[j].imag() > 1e-10) picked.push_back(j);
  }
  if (static_cast<int>(picked.size()) * 2 != dim) return false;

  std::vector<RotPlane> planes;
  for (int j : picked) {
    CVector wv = vecs.col(j);
    int rmax = 0;
    for (int r = 1; r < dim; ++r)
      if (std::abs(wv[r]) > std::abs(wv[rmax])) rmax = r;
    CVector av = ua.cast<std::complex<double>>() * wv;
    CVector cv = uc.cast<std::complex<double>>() * wv;
    std::complex<double> la = av[rmax] / wv[rmax];
    std::complex<double> lc = cv[rmax] / wv[rmax];
    // the eigenvector must be a joint eigenvector; otherwise xi collided
    if ((av - la * wv).cwiseAbs().maxCoeff() > 1e-8) return false;
    if ((cv - lc * wv).cwiseAbs().maxCoeff() > 1e-8) return false;
    RotPlane pl;
    pl.u = Vector(dim);
    pl.w = Vector(dim);
    for (int r = 0; r < dim; ++r) {
      pl.u[r] = wv[r].real();
      pl.w[r] = wv[r].imag();
    }
    // in basis (u, w) the restriction of ua is rotation2(-arg(la))
    pl.theta_a = fold_angle(-std::atan2(la.imag(), la.real()));
    pl.theta_c = fold_angle(-std::atan2(lc.imag(), lc.real()));
    planes.push_back(pl);
  }
  out = planes;
  return true;
}

/// Canonical-form matrix of stage R at stage parameter w; exact integer
/// entries at w = 1.
inline Matrix stage_r_value(const SynthPlan& plan, double w, bool for_a) {
  if (w >= 1.0) return for_a ? plan.canon_a : plan.canon_c;
  Matrix m = Matrix::Identity(plan.n, plan.n);
  for (const auto& slot : plan.slots) {
    if (slot.kind == SlotKind::RBlock) {
      const Matrix& target = for_a ? plan.canon_a : plan.canon_c;
      m.block(slot.offset, slot.offset, 3, 3) = target.block(slot.offset, slot.offset, 3, 3);
    } else if (slot.kind == SlotKind::Rotation) {
      double theta = (for_a ? slot.theta_a : slot.theta_c) * (1.0 - w);
      m.block(slot.offset, slot.offset, 2, 2) = rotation2(theta);
    }
  }
  return m;
}

inline SynthPlan build_synth_plan(const CommutingPair& pair, double cluster_tol) {
  SynthPlan plan;
  plan.n = pair.n();

  EigenStructure es = common_eigenstructure(pair, cluster_tol);
  double neg_tol = cluster_tol > 0.0 ? cluster_tol : default_negative_tol(es);

  plan.v = Matrix::Zero(plan.n, plan.n);
  int off = 0;
  for (const auto& blk : es.blocks) {
    plan.v.block(0, off, plan.n, blk.dim) = blk.basis;
    off += blk.dim;
  }
  plan.v_inv = plan.v.partialPivLu().inverse();
  Matrix ta = plan.v_inv * pair.a * plan.v;
  Matrix tc = plan.v_inv * pair.c * plan.v;

  off = 0;
  for (const auto& blk : es.blocks) {
    Matrix ba = ta.block(off, off, blk.dim, blk.dim);
    Matrix bc = tc.block(off, off, blk.dim, blk.dim);
    plan.blk_a0.push_back(ba);
    plan.blk_c0.push_back(bc);
    plan.blk_sa.push_back(semisimple_part(ba, blk.lambda_a));
    plan.blk_sc.push_back(semisimple_part(bc, blk.lambda_c));
    plan.scale_a.push_back(std::abs(blk.lambda_a));
    plan.scale_c.push_back(std::abs(blk.lambda_c));
    off += blk.dim;
  }
  plan.off_a = pair.a - assemble_block_diagonal(plan, plan.blk_a0);
  plan.off_c = pair.c - assemble_block_diagonal(plan, plan.blk_c0);

  std::vector<Matrix> unit_a, unit_c;
  for (std::size_t i = 0; i < plan.blk_sa.size(); ++i) {
    unit_a.push_back(plan.blk_sa[i] / plan.scale_a[i]);
    unit_c.push_back(plan.blk_sc[i] / plan.scale_c[i]);
  }
  plan.a_unit = assemble_block_diagonal(plan, unit_a);
  plan.c_unit = assemble_block_diagonal(plan, unit_c);

  // canonical columns: sign vectors and invariant rotation planes
  std::vector<Vector> cols_mm, cols_mp, cols_pm, cols_pp;
  std::vector<RotPlane> rot_planes;
  const double pi = 3.14159265358979323846264338327950288;

  off = 0;
  for (std::size_t bi = 0; bi < es.blocks.size(); ++bi) {
    const EigenBlock& blk = es.blocks[bi];
    bool a_real = std::abs(blk.lambda_a.imag()) <= neg_tol;
    bool c_real = std::abs(blk.lambda_c.imag()) <= neg_tol;
    if (a_real && c_real) {
      bool a_neg = is_negative_real(blk.lambda_a, neg_tol);
      bool c_neg = is_negative_real(blk.lambda_c, neg_tol);
      for (int j = 0; j < blk.dim; ++j) {
        Vector col = plan.v.col(off + j);
        if (a_neg && c_neg)
          cols_mm.push_back(col);
        else if (a_neg)
          cols_mp.push_back(col);
        else if (c_neg)
          cols_pm.push_back(col);
        else
          cols_pp.push_back(col);
      }
    } else {
      std::vector<RotPlane> planes;
      bool ok = false;
      for (double xi : {0.6180339887498949, 1.3247179572447460, 0.2862792204473558,
                        2.5029078750958928}) {
        if (extract_rot_planes(unit_a[bi], unit_c[bi], xi, planes)) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        throw Error(ErrorCode::ClusterAmbiguity,
                    "failed to split a rotation block into invariant planes");
      }
      Matrix vb = plan.v.block(0, off, plan.n, blk.dim);
      for (auto& pl : planes) {
        pl.u = (vb * pl.u).eval();
        pl.w = (vb * pl.w).eval();
        rot_planes.push_back(pl);
      }
    }
    off += blk.dim;
  }

  plan.nu = static_cast<int>(cols_mm.size() % 2);

  std::vector<Vector> columns;
  std::vector<CanonicalSlot> slots;
  if (plan.nu == 1) {
    if (cols_mp.empty() || cols_pm.empty()) {
      throw Error(ErrorCode::ClusterAmbiguity,
                  "odd negative parity without matching sign blocks");
    }
    slots.push_back({SlotKind::RBlock, 0, 3, 0.0, 0.0});
    columns.push_back(cols_mp.back());
    cols_mp.pop_back();
    columns.push_back(cols_mm.back());
    cols_mm.pop_back();
    columns.push_back(cols_pm.back());
    cols_pm.pop_back();
  }
  auto pair_up = [&](std::vector<Vector>& cols, double ta, double tc) {
    while (cols.size() >= 2) {
      slots.push_back({SlotKind::Rotation, static_cast<int>(columns.size()), 2, ta, tc});
      columns.push_back(cols.back());
      cols.pop_back();
      columns.push_back(cols.back());
      cols.pop_back();
    }
  };
  pair_up(cols_mm, pi, pi);
  pair_up(cols_mp, pi, 0.0);
  pair_up(cols_pm, 0.0, pi);
  for (const auto& pl : rot_planes) {
    slots.push_back(
        {SlotKind::Rotation, static_cast<int>(columns.size()), 2, pl.theta_a, pl.theta_c});
    columns.push_back(pl.u);
    columns.push_back(pl.w);
  }
  for (const auto& col : cols_pp) {
    slots.push_back({SlotKind::Identity, static_cast<int>(columns.size()), 1, 0.0, 0.0});
    columns.push_back(col);
  }
  if (static_cast<int>(columns.size()) != plan.n) {
    throw Error(ErrorCode::ClusterAmbiguity, "canonical column count mismatch");
  }
  Matrix b(plan.n, plan.n);
  for (int j = 0; j < plan.n; ++j) b.col(j) = columns[j];
  if (b.determinant() < 0.0) {
    b.col(plan.n - 1) = -b.col(plan.n - 1);
    if (!slots.empty() && slots.back().kind == SlotKind::Rotation &&
        slots.back().offset + 1 == plan.n - 1) {
      slots.back().theta_a = fold_angle(-slots.back().theta_a);
      slots.back().theta_c = fold_angle(-slots.back().theta_c);
    }
  }
  plan.slots = slots;
  plan.b = b;

  PolarDecomposition pd = polar_decompose(b);
  plan.log_q = orthogonal_log(pd.q);
  plan.p = pd.p;

  plan.canon_a = Matrix::Identity(plan.n, plan.n);
  plan.canon_c = Matrix::Identity(plan.n, plan.n);
  if (plan.nu == 1) {
    plan.canon_a(0, 0) = -1.0;
    plan.canon_a(1, 1) = -1.0;
    plan.canon_c(1, 1) = -1.0;
    plan.canon_c(2, 2) = -1.0;
  }
  return plan;
}

inline Matrix synth_eval(const SynthPlan& plan, double t, bool for_a) {
  const auto& blk0 = for_a ? plan.blk_a0 : plan.blk_c0;
  const auto& blk_s = for_a ? plan.blk_sa : plan.blk_sc;
  const auto& scale = for_a ? plan.scale_a : plan.scale_c;
  const Matrix& off = for_a ? plan.off_a : plan.off_c;
  const Matrix& unit = for_a ? plan.a_unit : plan.c_unit;

  double u = std::clamp(t, 0.0, 1.0) * 4.0;
  int stage = std::min(3, static_cast<int>(u));
  double w = smooth_step(u - stage);
  if (t >= 1.0) {
    stage = 3;
    w = 1.0;
  }

  switch (stage) {
    case 0: {  // S: interpolate to the semisimple parts blockwise
      std::vector<Matrix> blocks;
      for (std::size_t i = 0; i < blk0.size(); ++i)
        blocks.push_back((1.0 - w) * blk0[i] + w * blk_s[i]);
      return assemble_block_diagonal(plan, blocks) + (1.0 - w) * off;
    }
    case 1: {  // N: radial rescaling onto the unit circle
      std::vector<Matrix> blocks;
      for (std::size_t i = 0; i < blk0.size(); ++i)
        blocks.push_back(blk_s[i] * std::pow(scale[i], -w));
      return assemble_block_diagonal(plan, blocks);
    }
    case 2: {  // O: conjugate by the polar path from I to b
      Matrix beta = (w * plan.log_q).exp() *
                    ((1.0 - w) * Matrix::Identity(plan.n, plan.n) + w * plan.p);
      return beta.partialPivLu().solve(unit * beta);
    }
    default:  // R: rotate the SO(2) pairs to the identity
      return stage_r_value(plan, w, for_a);
  }
}

}  // namespace detail

struct SynthResult {
  SampledPath alpha;
  SampledPath gamma;
  int nu = 0;
};

/// Four-stage synthesis of commuting paths from (a, c) to the canonical
/// pair: S semisimplification, N radial rescaling onto the unit circle,
/// O conjugation by a polar path to the orthogonal arrangement, R
/// simultaneous SO(2) rotations. Stages are reparametrized by the smooth
/// step, so all derivatives vanish at the junctions.
inline SynthResult synth_commuting_path(const CommutingPair& pair, int grid = 1024,
                                        double cluster_tol = 0.0) {
  if (pair.n() < 3) throw Error(ErrorCode::DimensionTooSmall, "path synthesis requires n >= 3");
  if (grid < 16) throw Error(ErrorCode::ConfigError, "grid must be at least 16");
  validate_pair(pair, /*require_orientation=*/true);

  auto plan = std::make_shared<detail::SynthPlan>(detail::build_synth_plan(pair, cluster_tol));

  std::vector<StageLabel> labels = {
      {0.0, 0.25, "S"}, {0.25, 0.5, "N"}, {0.5, 0.75, "O"}, {0.75, 1.0, "R"}};
  SynthResult out;
  out.nu = plan->nu;
  out.alpha = sample_path([plan](double t) { return detail::synth_eval(*plan, t, true); }, 0.0,
                          1.0, grid, labels);
  out.gamma = sample_path([plan](double t) { return detail::synth_eval(*plan, t, false); }, 0.0,
                          1.0, grid, labels);

  for (int m = 0; m < out.alpha.sample_count(); ++m) {
    if (out.alpha.values[m].determinant() < 1e-12 ||
        out.gamma.values[m].determinant() < 1e-12) {
      throw Error(ErrorCode::PathDegenerate,
                  "determinant fell below 1e-12 at sample " + std::to_string(m));
    }
  }
  return out;
}

/// Max over samples of ||alpha gamma alpha^-1 gamma^-1 - I||_max, evaluated
/// directly from the stored samples (independent of the synthesis
/// internals).
inline double path_commutator_residual(const SampledPath& alpha, const SampledPath& gamma) {
  if (alpha.sample_count() != gamma.sample_count()) {
    throw Error(ErrorCode::GridMismatch, "sample counts differ");
  }
  for (int m = 0; m < alpha.sample_count(); ++m) {
    if (std::abs(alpha.times[m] - gamma.times[m]) > 1e-12) {
      throw Error(ErrorCode::GridMismatch, "sample times differ");
    }
  }
  double worst = 0.0;
  const int n = static_cast<int>(alpha.values[0].rows());
  Matrix eye = Matrix::Identity(n, n);
  for (int m = 0; m < alpha.sample_count(); ++m) {
    const Matrix& a = alpha.values[m];
    const Matrix& g = gamma.values[m];
    Matrix comm = a * g * (g * a).partialPivLu().inverse();
    worst = std::max(worst, max_abs(comm - eye));
  }
  return worst;
}

inline Matrix standard_skew_form(int n) {
  Matrix j = Matrix::Zero(n, n);
  int h = n / 2;
  for (int i = 0; i < h; ++i) {
    j(i, h + i) = 1.0;
    j(h + i, i) = -1.0;
  }
  return j;
}

/// Sanity predicate from the symplectic discussion: a pair preserving a
/// nondegenerate skew form has even negative parity.
inline bool symplectic_parity_check(const CommutingPair& pair, const Matrix& skew_form) {
  if (pair.n() % 2 != 0) {
    throw Error(ErrorCode::NotSymplectic, "dimension must be even");
  }
  double res_a = max_abs(pair.a.transpose() * skew_form * pair.a - skew_form);
  double res_c = max_abs(pair.c.transpose() * skew_form * pair.c - skew_form);
  if (std::max(res_a, res_c) > 1e-8) {
    throw Error(ErrorCode::NotSymplectic,
                "skew form preservation residual " + std::to_string(std::max(res_a, res_c)));
  }
  return negative_parity(pair) == 0;
}

inline bool symplectic_parity_check(const CommutingPair& pair) {
  return symplectic_parity_check(pair, standard_skew_form(pair.n()));
}

}  // namespace twistlab
