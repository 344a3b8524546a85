#include "onelap/energy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "onelap/format.hpp"

namespace onelap {

namespace {

SourceSpec with_branch(const SourceSpec& spec, Branch branch)
{
    SourceSpec s = spec;
    s.branch = branch;
    return s;
}

// (|g|^2 + eps^2)^{(p-2)/2}; zero flux coefficient stands in for the
// unregularized limit at g = 0.
double flux_coefficient(double g2, double p, double eps)
{
    const double s = g2 + eps * eps;
    if (s == 0.0) {
        return p == 2.0 ? 1.0 : 0.0;
    }
    return std::pow(s, 0.5 * (p - 2.0));
}

}  // namespace

Field::Field(const Mesh& mesh, bool zero_trace)
    : mesh_(&mesh), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()))),
      zero_trace_(zero_trace)
{
}

Field::Field(const Mesh& mesh, Eigen::VectorXd values, bool zero_trace)
    : mesh_(&mesh), values_(), zero_trace_(zero_trace)
{
    set_values(std::move(values));
}

void Field::set_values(Eigen::VectorXd values)
{
    if (values.size() != static_cast<Eigen::Index>(mesh_->num_vertices())) {
        throw std::invalid_argument("field size does not match the mesh");
    }
    if (zero_trace_) {
        for (int v : mesh_->boundary_vertices()) {
            if (values[v] != 0.0) {
                throw std::invalid_argument("zero-trace field has a nonzero boundary value");
            }
        }
    }
    values_ = std::move(values);
}

Vec2 Field::gradient(std::size_t t) const
{
    const auto& tri = mesh_->triangles()[t];
    Vec2 g = Vec2::Zero();
    for (int i = 0; i < 3; ++i) {
        g += values_[tri[i]] * mesh_->hat_gradient(t, i);
    }
    return g;
}

FreeDofs::FreeDofs(const Mesh& mesh) : index_(mesh.num_vertices(), -1), num_vertices_(mesh.num_vertices())
{
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary(static_cast<int>(v))) {
            index_[v] = static_cast<int>(dofs_.size());
            dofs_.push_back(static_cast<int>(v));
        }
    }
}

Eigen::VectorXd FreeDofs::restrict(const Eigen::VectorXd& nodal) const
{
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i) {
        out[i] = nodal[dofs_[i]];
    }
    return out;
}

Eigen::VectorXd FreeDofs::extend(const Eigen::VectorXd& reduced) const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_vertices_));
    for (int i = 0; i < size(); ++i) {
        out[dofs_[i]] = reduced[i];
    }
    return out;
}

double energy_Jp(const Field& u, const EnergyParams& params, const SourceSpec& spec)
{
    const Mesh& mesh = u.mesh();
    double gradient_term = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double g2 = u.gradient(t).squaredNorm();
        gradient_term += mesh.area(t) * std::pow(g2 + params.eps * params.eps, 0.5 * params.p);
    }
    const SourceSpec branch = with_branch(spec, params.branch);
    double source_term = 0.0;
    const auto& mass = mesh.lumped_mass();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        source_term += mass[v] * F_eval(branch, u[static_cast<int>(v)]);
    }
    return gradient_term / params.p - source_term;
}

double energy_Ip(const Field& u, const EnergyParams& params, const SourceSpec& spec)
{
    EnergyParams plus = params;
    plus.branch = Branch::plus;
    return energy_Jp(u, plus, spec) + (params.p - 1.0) / params.p * u.mesh().total_area();
}

double energy_J1(const Field& u, const SourceSpec& spec)
{
    const Mesh& mesh = u.mesh();
    const auto& mass = mesh.lumped_mass();
    double source_term = 0.0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        source_term += mass[v] * F_eval(spec, u[static_cast<int>(v)]);
    }
    return total_variation(u) + trace_l1(u) - source_term;
}

Eigen::VectorXd gradient_Jp(const Field& u, const EnergyParams& params, const SourceSpec& spec)
{
    const Mesh& mesh = u.mesh();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = u.gradient(t);
        const Vec2 flux = flux_coefficient(g.squaredNorm(), params.p, params.eps) * g;
        const auto& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i) {
            r[tri[i]] += mesh.area(t) * flux.dot(mesh.hat_gradient(t, i));
        }
    }
    const SourceSpec branch = with_branch(spec, params.branch);
    const auto& mass = mesh.lumped_mass();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_boundary(static_cast<int>(v))) {
            r[static_cast<Eigen::Index>(v)] = 0.0;
        } else {
            r[static_cast<Eigen::Index>(v)] -= mass[v] * f_eval(branch, u[static_cast<int>(v)]);
        }
    }
    return r;
}

Eigen::MatrixXd hessian_Jp(const Field& u, const EnergyParams& params, const SourceSpec& spec,
                           const FreeDofs& dofs)
{
    const Mesh& mesh = u.mesh();
    const double p = params.p;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dofs.size(), dofs.size());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = u.gradient(t);
        const double s = std::max(g.squaredNorm() + params.eps * params.eps, 1e-300);
        const double c = std::pow(s, 0.5 * (p - 2.0));
        const double c2 = (p - 2.0) * std::pow(s, 0.5 * (p - 4.0));
        const Eigen::Matrix2d D = c * Eigen::Matrix2d::Identity() + c2 * g * g.transpose();
        const auto& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i) {
            const int a = dofs.index(tri[i]);
            if (a < 0) {
                continue;
            }
            for (int j = 0; j < 3; ++j) {
                const int b = dofs.index(tri[j]);
                if (b < 0) {
                    continue;
                }
                H(a, b) += mesh.area(t) * mesh.hat_gradient(t, i).dot(D * mesh.hat_gradient(t, j));
            }
        }
    }
    const SourceSpec branch = with_branch(spec, params.branch);
    const auto& mass = mesh.lumped_mass();
    for (int a = 0; a < dofs.size(); ++a) {
        const int v = dofs.vertices()[a];
        H(a, a) -= mass[v] * df_eval(branch, u[v]);
    }
    return H;
}

Eigen::MatrixXd stiffness_matrix(const Mesh& mesh, const FreeDofs& dofs)
{
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dofs.size(), dofs.size());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i) {
            const int a = dofs.index(tri[i]);
            if (a < 0) {
                continue;
            }
            for (int j = 0; j < 3; ++j) {
                const int b = dofs.index(tri[j]);
                if (b >= 0) {
                    K(a, b) += mesh.area(t) * mesh.hat_gradient(t, i).dot(mesh.hat_gradient(t, j));
                }
            }
        }
    }
    return K;
}

double grad_p_integral(const Field& u, double p)
{
    double sum = 0.0;
    for (std::size_t t = 0; t < u.mesh().num_triangles(); ++t) {
        sum += u.mesh().area(t) * std::pow(u.gradient(t).norm(), p);
    }
    return sum;
}

double total_variation(const Field& u)
{
    return grad_p_integral(u, 1.0);
}

double trace_l1(const Field& u)
{
    double sum = 0.0;
    for (const auto& e : u.mesh().boundary_edges()) {
        sum += e.length * 0.5 * (std::abs(u[e.vertices[0]]) + std::abs(u[e.vertices[1]]));
    }
    return sum;
}

double bv_norm(const Field& u)
{
    return total_variation(u) + trace_l1(u);
}

void write_field(std::ostream& os, const Field& u)
{
    os << u.values().size() << '\n';
    for (Eigen::Index i = 0; i < u.values().size(); ++i) {
        os << fmt_exact(u.values()[i]) << '\n';
    }
}

Field read_field(std::istream& is, const Mesh& mesh, bool zero_trace)
{
    Eigen::Index n = 0;
    if (!(is >> n) || n != static_cast<Eigen::Index>(mesh.num_vertices())) {
        throw std::runtime_error("field dump: size does not match the mesh");
    }
    Eigen::VectorXd values(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(is >> values[i])) {
            throw std::runtime_error("field dump: truncated");
        }
    }
    return Field(mesh, std::move(values), zero_trace);
}

}  // namespace onelap
