#include "vcl/assembly.hpp"

#include "vcl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vcl {

// ---------------------------------------------------------------------------
// AlphaParam

AlphaParam::AlphaParam(std::vector<double> values) : values_(std::move(values)) {}

double AlphaParam::min() const { return *std::min_element(values_.begin(), values_.end()); }

double AlphaParam::max() const { return *std::max_element(values_.begin(), values_.end()); }

void AlphaParam::requirePositive(const char* where) const {
  if (values_.empty()) {
    throw InputError(std::string(where) + ": empty alpha");
  }
  for (double v : values_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError(std::string(where) + ": alpha values must be positive and finite");
    }
  }
}

// ---------------------------------------------------------------------------
// SymmetricPattern

SymmetricPattern::SymmetricPattern(int dim, const std::vector<std::vector<int>>& element_dofs) {
  std::vector<Eigen::Triplet<double>> triplets;
  local_dims_.reserve(element_dofs.size());
  offsets_.reserve(element_dofs.size());
  std::size_t total = 0;
  for (const auto& dofs : element_dofs) {
    offsets_.push_back(total);
    local_dims_.push_back(static_cast<int>(dofs.size()));
    total += dofs.size() * dofs.size();
    for (int a : dofs) {
      for (int b : dofs) {
        if (a >= 0 && b >= 0) {
          triplets.emplace_back(a, b, 0.0);
        }
      }
    }
  }
  skeleton_.resize(dim, dim);
  skeleton_.setFromTriplets(triplets.begin(), triplets.end());
  skeleton_.makeCompressed();

  slots_.assign(total, -1);
  const int* outer = skeleton_.outerIndexPtr();
  const int* inner = skeleton_.innerIndexPtr();
  for (std::size_t k = 0; k < element_dofs.size(); ++k) {
    const auto& dofs = element_dofs[k];
    const auto n = dofs.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const int row = dofs[i];
        const int col = dofs[j];
        if (row < 0 || col < 0) {
          continue;
        }
        const int* first = inner + outer[col];
        const int* last = inner + outer[col + 1];
        const int* it = std::lower_bound(first, last, row);
        slots_[offsets_[k] + i * n + j] = static_cast<int>(it - inner);
      }
    }
  }
}

SparseMatrix SymmetricPattern::withValues(std::span<const double> values) const {
  SparseMatrix m = skeleton_;
  std::copy(values.begin(), values.end(), m.valuePtr());
  return m;
}

namespace {

// A_alpha psi = alpha * P(psi) + Q(psi) with P(q, u) = (q, 0) and
// Q(q, u) = (grad u, div q); A*_alpha v = alpha * P(v) + Q*(v) with
// Q*(tau, nu) = (-grad nu, -div tau). Each field has three components.
using Field3 = Eigen::Vector3d;

std::vector<std::vector<int>> elementDofs(const std::vector<std::array<int, 6>>& dofs) {
  std::vector<std::vector<int>> out;
  out.reserve(dofs.size());
  for (const auto& d : dofs) {
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// FOSLS

FoslsOperators assembleFOSLS(const TriMesh& mesh, const Source& f) {
  FoslsOperators ops;
  ops.layout = foslsLayout(mesh);
  const auto& rt = ops.layout.blocks[0];
  const auto& p1 = ops.layout.blocks[1];
  const int scalar_offset = ops.layout.offset(1);
  const int nt = static_cast<int>(mesh.numTriangles());
  const int nsub = mesh.numSubdomains();

  const QuadratureRule rule = triangleRule(6);
  ops.blocks.resize(nt);
  ops.elem_subdomain.resize(nt);

  std::vector<std::array<int, 6>> dofs(nt);
  for (int k = 0; k < nt; ++k) {
    auto& blk = ops.blocks[k];
    for (int i = 0; i < 3; ++i) {
      blk.dofs[i] = rt.local_to_global[k][i];
      const int g = p1.local_to_global[k][i];
      blk.dofs[3 + i] = g < 0 ? -1 : scalar_offset + g;
    }
    dofs[k] = blk.dofs;
    ops.elem_subdomain[k] = mesh.subdomain[k];

    const BasisTable flux = evalBasis(mesh, SpaceKind::RT0, k, rule.points);
    const BasisTable scal = evalBasis(mesh, SpaceKind::LagrangeP1Zero, k, rule.points);
    const double jac = 2.0 * mesh.area(k);

    blk.alpha_sq.setZero();
    blk.alpha.setZero();
    blk.base.setZero();
    blk.load.setZero();
    blk.mass.setZero();
    for (int p = 0; p < flux.num_points; ++p) {
      const double w = rule.weights[p] * jac;
      const double fx = f(mapToElement(mesh, k, rule.points[p]));
      ops.source_norm_sq += w * fx * fx;
      std::array<Field3, 6> pp, qq;
      for (int i = 0; i < 3; ++i) {
        const auto& e = flux.at(p, i);
        pp[i] = Field3(e.vec.x(), e.vec.y(), 0.0);
        qq[i] = Field3(0.0, 0.0, e.div);
        const auto& s = scal.at(p, i);
        pp[3 + i] = Field3::Zero();
        qq[3 + i] = Field3(s.grad.x(), s.grad.y(), 0.0);
      }
      for (int a = 0; a < 6; ++a) {
        // (F, A psi_a) with F = (0, 0, f)
        blk.load(a) += w * fx * qq[a](2);
        for (int b = 0; b < 6; ++b) {
          blk.alpha_sq(a, b) += w * pp[a].dot(pp[b]);
          blk.alpha(a, b) += w * (pp[a].dot(qq[b]) + qq[a].dot(pp[b]));
          blk.base(a, b) += w * qq[a].dot(qq[b]);
        }
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          blk.mass(a, b) += w * flux.at(p, a).vec.dot(flux.at(p, b).vec);
          blk.mass(3 + a, 3 + b) += w * scal.at(p, a).scalar * scal.at(p, b).scalar;
        }
      }
    }
  }

  ops.pattern = SymmetricPattern(ops.layout.total_dim, elementDofs(dofs));
  const auto nnz = static_cast<std::size_t>(ops.pattern.nonZeros());
  ops.base_values.assign(nnz, 0.0);
  ops.alpha_values.assign(nsub, std::vector<double>(nnz, 0.0));
  ops.alpha_sq_values.assign(nsub, std::vector<double>(nnz, 0.0));
  std::vector<double> mass_values(nnz, 0.0);
  ops.rhs = Vector::Zero(ops.layout.total_dim);
  for (int k = 0; k < nt; ++k) {
    const auto& blk = ops.blocks[k];
    const int sub = ops.elem_subdomain[k];
    ops.pattern.scatter(k, blk.base, ops.base_values);
    ops.pattern.scatter(k, blk.alpha, ops.alpha_values[sub]);
    ops.pattern.scatter(k, blk.alpha_sq, ops.alpha_sq_values[sub]);
    ops.pattern.scatter(k, blk.mass, mass_values);
    for (int a = 0; a < 6; ++a) {
      if (blk.dofs[a] >= 0) {
        ops.rhs(blk.dofs[a]) += blk.load(a);
      }
    }
  }
  ops.mass = ops.pattern.withValues(mass_values);
  return ops;
}

std::vector<double> FoslsOperators::matrixValues(const AlphaParam& alpha) const {
  std::vector<double> values = base_values;
  for (std::size_t i = 0; i < alpha_values.size(); ++i) {
    const double a = alpha[static_cast<int>(i)];
    const double a2 = a * a;
    const auto& v1 = alpha_values[i];
    const auto& v2 = alpha_sq_values[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      values[j] += a * v1[j] + a2 * v2[j];
    }
  }
  return values;
}

SparseMatrix FoslsOperators::matrix(const AlphaParam& alpha) const {
  if (alpha.size() != static_cast<int>(alpha_values.size())) {
    throw InputError("FoslsOperators::matrix: alpha has wrong length");
  }
  return pattern.withValues(matrixValues(alpha));
}

SparseMatrix FoslsOperators::component(int order, int subdomain) const {
  switch (order) {
  case 0:
    return pattern.withValues(base_values);
  case 1:
    return pattern.withValues(alpha_values.at(subdomain));
  case 2:
    return pattern.withValues(alpha_sq_values.at(subdomain));
  default:
    throw InputError("FoslsOperators::component: order must be 0, 1 or 2");
  }
}

// ---------------------------------------------------------------------------
// DPG

Matrix22 GramComponents::combine(double alpha_k, double s) const {
  return alpha_k * alpha_k * alpha_sq + alpha_k * alpha + base + (1.0 / (s * s)) * mass;
}

namespace {

GramComponents elementGram(const TriMesh& mesh, int k, const QuadratureRule& rule) {
  const BasisTable test = evalBasis(mesh, SpaceKind::BrokenTest, k, rule.points);
  const double jac = 2.0 * mesh.area(k);
  GramComponents g;
  g.alpha_sq.setZero();
  g.alpha.setZero();
  g.base.setZero();
  g.mass.setZero();
  std::array<Field3, kTestDofsPerElement> pp, qq, vv;
  for (int p = 0; p < test.num_points; ++p) {
    const double w = rule.weights[p] * jac;
    for (int i = 0; i < kTestDofsPerElement; ++i) {
      const auto& e = test.at(p, i);
      if (i < kTauDofs) {
        pp[i] = Field3(e.vec.x(), e.vec.y(), 0.0);
        qq[i] = Field3(0.0, 0.0, -e.div);
        vv[i] = pp[i];
      } else {
        pp[i] = Field3::Zero();
        qq[i] = Field3(-e.grad.x(), -e.grad.y(), 0.0);
        vv[i] = Field3(0.0, 0.0, e.scalar);
      }
    }
    for (int a = 0; a < kTestDofsPerElement; ++a) {
      for (int b = 0; b < kTestDofsPerElement; ++b) {
        g.alpha_sq(a, b) += w * pp[a].dot(pp[b]);
        g.alpha(a, b) += w * (pp[a].dot(qq[b]) + qq[a].dot(pp[b]));
        g.base(a, b) += w * qq[a].dot(qq[b]);
        g.mass(a, b) += w * vv[a].dot(vv[b]);
      }
    }
  }
  return g;
}

bool congruent(const TriMesh& mesh, int a, int b) {
  const auto& ta = mesh.triangles[a];
  const auto& tb = mesh.triangles[b];
  for (int i = 1; i < 3; ++i) {
    const Point da = mesh.vertices[ta[i]] - mesh.vertices[ta[0]];
    const Point db = mesh.vertices[tb[i]] - mesh.vertices[tb[0]];
    if ((da - db).norm() > 1e-12 * mesh.h) {
      return false;
    }
  }
  return true;
}

} // namespace

DpgOperators assembleDPG(const TriMesh& mesh, const Source& f) {
  DpgOperators ops;
  ops.layout = dpgLayout(mesh);
  const auto& uhat = ops.layout.blocks[2];
  const int nt = static_cast<int>(mesh.numTriangles());
  const int q_off = ops.layout.offset(0);
  const int u_off = ops.layout.offset(1);
  const int uh_off = ops.layout.offset(2);
  const int qh_off = ops.layout.offset(3);

  const QuadratureRule rule = triangleRule(6);
  const LineRule line = gaussLegendre01(4);

  ops.blocks.resize(nt);
  ops.elem_subdomain.resize(nt);
  ops.elem_gram_class.resize(nt);
  ops.elem_area.resize(nt);
  std::vector<int> class_representative;
  std::vector<std::vector<int>> schur_dofs(nt);

  for (int k = 0; k < nt; ++k) {
    auto& blk = ops.blocks[k];
    ops.elem_subdomain[k] = mesh.subdomain[k];
    ops.elem_area[k] = mesh.area(k);
    blk.dofs[0] = q_off + 2 * k;
    blk.dofs[1] = q_off + 2 * k + 1;
    blk.dofs[2] = u_off + k;
    for (int i = 0; i < 3; ++i) {
      const int g = uhat.local_to_global[k][i];
      blk.dofs[3 + i] = g < 0 ? -1 : uh_off + g;
      blk.dofs[6 + i] = qh_off + mesh.elem_edges[k][i];
    }
    schur_dofs[k].assign(blk.dofs.begin(), blk.dofs.end());

    // Gram components, shared among congruent elements
    int cls = -1;
    for (std::size_t c = 0; c < class_representative.size(); ++c) {
      if (congruent(mesh, k, class_representative[c])) {
        cls = static_cast<int>(c);
        break;
      }
    }
    if (cls < 0) {
      cls = static_cast<int>(ops.gram_classes.size());
      class_representative.push_back(k);
      ops.gram_classes.push_back(elementGram(mesh, k, rule));
    }
    ops.elem_gram_class[k] = cls;

    // Interior terms: (q, u) . A*(tau, nu) and the load (f, nu)
    const BasisTable test = evalBasis(mesh, SpaceKind::BrokenTest, k, rule.points);
    const double jac = 2.0 * mesh.area(k);
    blk.base.setZero();
    blk.alpha.setZero();
    blk.load.setZero();
    for (int p = 0; p < test.num_points; ++p) {
      const double w = rule.weights[p] * jac;
      const double fx = f(mapToElement(mesh, k, rule.points[p]));
      for (int i = 0; i < kTestDofsPerElement; ++i) {
        const auto& e = test.at(p, i);
        if (i < kTauDofs) {
          blk.alpha(i, 0) += w * e.vec.x();
          blk.alpha(i, 1) += w * e.vec.y();
          blk.base(i, 2) -= w * e.div;
        } else {
          blk.base(i, 0) -= w * e.grad.x();
          blk.base(i, 1) -= w * e.grad.y();
          blk.load(i) += w * fx * e.scalar;
        }
      }
    }

    // Interface terms: <u-hat, tau.n> and <q-hat.n, nu> on the element boundary
    const auto& tri = mesh.triangles[k];
    for (int le = 0; le < 3; ++le) {
      const Point& pa = mesh.vertices[tri[(le + 1) % 3]];
      const Point& pb = mesh.vertices[tri[(le + 2) % 3]];
      const Point t = pb - pa;
      const double len = t.norm();
      const Vec2 normal = Vec2(t.y(), -t.x()) / len;
      const double sign = mesh.elem_edge_signs[k][le];
      std::vector<Bary> pts;
      for (double s : line.points) {
        pts.push_back(edgePoint(le, s));
      }
      const BasisTable test_e = evalBasis(mesh, SpaceKind::BrokenTest, k, pts);
      for (std::size_t p = 0; p < pts.size(); ++p) {
        const double w = line.weights[p] * len;
        for (int i = 0; i < kTestDofsPerElement; ++i) {
          const auto& e = test_e.at(static_cast<int>(p), i);
          if (i < kTauDofs) {
            const double tn = e.vec.dot(normal);
            for (int v = 0; v < 3; ++v) {
              blk.base(i, 3 + v) += w * pts[p][v] * tn;
            }
          } else {
            // q-hat . n_K = sign * (edge flux) / |e|
            blk.base(i, 6 + le) += w * sign / len * e.scalar;
          }
        }
      }
    }
    for (int v = 0; v < 3; ++v) {
      if (blk.dofs[3 + v] < 0) {
        blk.base.col(3 + v).setZero();
      }
    }
  }

  ops.schur_pattern = SymmetricPattern(ops.layout.total_dim, schur_dofs);
  return ops;
}

RowSparseMatrix DpgOperators::matrix(const AlphaParam& alpha) const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(blocks.size() * kTestDofsPerElement * 9);
  for (int k = 0; k < numElements(); ++k) {
    const TrialBlock local = elementMatrix(k, alpha);
    for (int j = 0; j < 9; ++j) {
      if (blocks[k].dofs[j] < 0) {
        continue;
      }
      for (int i = 0; i < kTestDofsPerElement; ++i) {
        if (local(i, j) != 0.0) {
          triplets.emplace_back(k * kTestDofsPerElement + i, blocks[k].dofs[j], local(i, j));
        }
      }
    }
  }
  RowSparseMatrix m(testDim(), dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

RowSparseMatrix DpgOperators::component(int subdomain) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < numElements(); ++k) {
    const TrialBlock* local = nullptr;
    if (subdomain < 0) {
      local = &blocks[k].base;
    } else if (elem_subdomain[k] == subdomain) {
      local = &blocks[k].alpha;
    } else {
      continue;
    }
    for (int j = 0; j < 9; ++j) {
      if (blocks[k].dofs[j] < 0) {
        continue;
      }
      for (int i = 0; i < kTestDofsPerElement; ++i) {
        if ((*local)(i, j) != 0.0) {
          triplets.emplace_back(k * kTestDofsPerElement + i, blocks[k].dofs[j], (*local)(i, j));
        }
      }
    }
  }
  RowSparseMatrix m(testDim(), dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Vector DpgOperators::load() const {
  Vector f(testDim());
  for (int k = 0; k < numElements(); ++k) {
    f.segment<kTestDofsPerElement>(k * kTestDofsPerElement) = blocks[k].load;
  }
  return f;
}

Matrix22 DpgOperators::gramMatrix(int elem, double alpha_k, double s) const {
  if (elem < 0 || elem >= numElements()) {
    throw InputError("gramMatrix: element index out of range");
  }
  if (!(alpha_k > 0.0) || !(s > 0.0)) {
    throw InputError("gramMatrix: alpha_K and s must be positive");
  }
  return gram_classes[elem_gram_class[elem]].combine(alpha_k, s);
}

// ---------------------------------------------------------------------------

ParametricOperators ParametricOperators::build(TriMesh mesh, const Source& f) {
  ParametricOperators ops;
  ops.fosls = assembleFOSLS(mesh, f);
  ops.dpg = assembleDPG(mesh, f);
  ops.num_subdomains = mesh.numSubdomains();
  ops.mesh = std::move(mesh);
  return ops;
}

void ParametricOperators::checkAlpha(const AlphaParam& alpha, const char* where) const {
  if (alpha.size() != num_subdomains) {
    throw InputError(std::string(where) + ": expected " + std::to_string(num_subdomains) +
                     " alpha values, got " + std::to_string(alpha.size()));
  }
  alpha.requirePositive(where);
}

} // namespace vcl
