#include "gmbm/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <memory>

#include "gmbm/error.hpp"
#include "gmbm/kernels.hpp"

namespace gmbm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr Index kPairBlock = 128;

void require_same_shape(const Eigen::Ref<const RowMatrix>& A, const Eigen::Ref<const RowMatrix>& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidInput("embedding and latent shapes differ");
}

void require_labels(std::size_t n, std::size_t labels) {
    if (n != labels) throw InvalidInput("label vector length does not match");
}

struct ResidualTerms {
    VectorXd ones_tilde;
    double p0 = 0.0;
    double linear_weight = 0.0;  // d_tilde lambda_1
};

ResidualTerms residual_terms(const LatentEmbedding& latents, const ExpansionCoefficients& coeffs) {
    if (coeffs.lambda.size() < 2) throw InvalidInput("linear residual needs lambda_0 and lambda_1");
    if (coeffs.dim != latents.d_tilde) throw InvalidInput("coefficients were computed for a different dimension");
    return {near_constant_vector(latents, coeffs), coeffs.p0(), coeffs.dim * coeffs.lambda1()};
}

// y -= (p0 t t^T + w U U^T) x.
void subtract_low_rank(const ResidualTerms& terms, double linear_weight, const RowMatrix& U, const double* x, double* y,
                       Index n) {
    const Eigen::Map<const VectorXd> xv(x, n);
    Eigen::Map<VectorXd> yv(y, n);
    const double t_dot = terms.ones_tilde.dot(xv);
    const VectorXd proj = U.transpose() * xv;
    yv -= terms.p0 * t_dot * terms.ones_tilde;
    yv.noalias() -= linear_weight * (U * proj);
}

double dense_norm(const MatrixXd& M) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(M, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NonConvergence("dense symmetric eigensolver failed", 0, 0.0);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

LinearResidual residual_from_apply(const std::function<void(const double*, double*)>& apply_A, double a_norm_hint,
                                   const LatentEmbedding& latents, const ExpansionCoefficients& coeffs,
                                   const ResidualOptions& options) {
    const auto terms = residual_terms(latents, coeffs);
    const auto n = static_cast<Index>(latents.n());
    const double t_norm2 = terms.ones_tilde.squaredNorm();
    const double u_norm2 = latents.U.squaredNorm();

    if (latents.n() <= options.dense_limit) {
        MatrixXd A(n, n);
        VectorXd e = VectorXd::Zero(n);
        for (Index j = 0; j < n; ++j) {
            e(j) = 1.0;
            apply_A(e.data(), A.col(j).data());
            e(j) = 0.0;
        }
        MatrixXd base = A - terms.p0 * terms.ones_tilde * terms.ones_tilde.transpose();
        const MatrixXd full = base - terms.linear_weight * (latents.U * latents.U.transpose());
        base = 0.5 * (base + base.transpose());
        return {dense_norm(0.5 * (full + full.transpose())), dense_norm(base)};
    }

    auto make = [&](bool with_linear) {
        SymmetricOperator op;
        op.n = latents.n();
        op.norm_hint = a_norm_hint + terms.p0 * t_norm2 + (with_linear ? std::abs(terms.linear_weight) * u_norm2 : 0.0);
        op.apply = [&, with_linear](std::span<const double> x, std::span<double> y) {
            apply_A(x.data(), y.data());
            subtract_low_rank(terms, with_linear ? terms.linear_weight : 0.0, latents.U, x.data(), y.data(), n);
        };
        return op;
    };
    return {operator_norm(make(true), options.eigen), operator_norm(make(false), options.eigen)};
}

}  // namespace

double label_overlap(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size()) throw InvalidInput("label vectors differ in length");
    if (x.empty()) throw InvalidInput("label vectors are empty");
    long long sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += static_cast<long long>(x[i]) * y[i];
    return static_cast<double>(std::llabs(sum)) / static_cast<double>(x.size());
}

double label_accuracy(std::span<const int> x, std::span<const int> y) {
    return 0.5 * (1.0 + label_overlap(x, y));
}

PairError pair_error(const Eigen::Ref<const RowMatrix>& U_hat, const Eigen::Ref<const RowMatrix>& U) {
    require_same_shape(U_hat, U);
    const Index n = U.rows();
    if (n == 0) throw InvalidInput("empty embedding");
    const Index blocks = (n + kPairBlock - 1) / kPairBlock;
    std::vector<double> abs_parts(static_cast<std::size_t>(blocks)), norm_parts(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(dynamic, 1)
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kPairBlock;
        const Index rows = std::min(kPairBlock, n - start);
        const MatrixXd est = U_hat.middleRows(start, rows) * U_hat.transpose();
        const MatrixXd truth = U.middleRows(start, rows) * U.transpose();
        double abs_sum = 0.0, norm_sum = 0.0;
        for (Index r = 0; r < rows; ++r) {
            for (Index c = 0; c < n; ++c) {
                abs_sum += std::abs(est(r, c) - truth(r, c));
                norm_sum += std::abs(truth(r, c));
            }
        }
        abs_parts[static_cast<std::size_t>(b)] = abs_sum;
        norm_parts[static_cast<std::size_t>(b)] = norm_sum;
    }

    double abs_total = 0.0, norm_total = 0.0;
    for (Index b = 0; b < blocks; ++b) {
        abs_total += abs_parts[static_cast<std::size_t>(b)];
        norm_total += norm_parts[static_cast<std::size_t>(b)];
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n);
    PairError out{abs_total / pairs, norm_total / pairs, 0.0};
    out.relative = out.norm > 0.0 ? out.abs / out.norm : 0.0;
    return out;
}

PairError pair_error_reference(const Eigen::Ref<const RowMatrix>& U_hat, const Eigen::Ref<const RowMatrix>& U) {
    require_same_shape(U_hat, U);
    const Index n = U.rows();
    double abs_total = 0.0, norm_total = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            double est = 0.0, truth = 0.0;
            for (Index k = 0; k < U.cols(); ++k) {
                est += U_hat(i, k) * U_hat(j, k);
                truth += U(i, k) * U(j, k);
            }
            abs_total += std::abs(est - truth);
            norm_total += std::abs(truth);
        }
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n);
    PairError out{abs_total / pairs, norm_total / pairs, 0.0};
    out.relative = out.norm > 0.0 ? out.abs / out.norm : 0.0;
    return out;
}

OperatorError operator_error(const Eigen::Ref<const RowMatrix>& U_hat, const Eigen::Ref<const RowMatrix>& U) {
    require_same_shape(U_hat, U);
    const Index n = U.rows(), d = U.cols();
    MatrixXd W(n, 2 * d);
    W << U_hat, U;
    const Eigen::HouseholderQR<MatrixXd> qr(W);
    const Index r = std::min(n, 2 * d);
    const MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    VectorXd signs(2 * d);
    signs << VectorXd::Ones(d), -VectorXd::Ones(d);
    MatrixXd core = R * signs.asDiagonal() * R.transpose();
    core = 0.5 * (core + core.transpose());
    return {dense_norm(core), core.norm()};
}

Eigen::VectorXd near_constant_vector(const LatentEmbedding& latents, const ExpansionCoefficients& coeffs) {
    if (coeffs.lambda.size() < 2) throw InvalidInput("need lambda_0 and lambda_1");
    const double p0 = coeffs.p0();
    if (!(p0 > 0.0)) throw InvalidInput("p_0 = 0: the near-constant vector is undefined");
    const double slope = coeffs.lambda1() * coeffs.dim * coeffs.tau_eff / p0;
    return (1.0 + slope * latents.L.array()).matrix();
}

double operator_norm(const SymmetricOperator& M, const EigenOptions& options) {
    SymmetricOperator square;
    square.n = M.n;
    square.norm_hint = M.norm_hint * M.norm_hint;
    auto scratch = std::make_shared<std::vector<double>>(M.n);
    square.apply = [&M, scratch](std::span<const double> x, std::span<double> y) {
        M.apply(x, *scratch);
        M.apply(*scratch, y);
    };
    const auto dec = eigentop(square, 1, options);
    return std::sqrt(std::max(dec.eigenvalues(0), 0.0));
}

LinearResidual linear_residual(const GraphSample& G, const LatentEmbedding& latents,
                               const ExpansionCoefficients& coeffs, const ResidualOptions& options) {
    require_labels(G.n, latents.n());
    auto apply_A = [&G](const double* x, double* y) {
        kernels::csr_matvec(G.offsets, G.neighbors, {x, G.n}, {y, G.n});
    };
    return residual_from_apply(apply_A, G.frobenius_norm(), latents, coeffs, options);
}

LinearResidual linear_residual(const Eigen::MatrixXd& A, const LatentEmbedding& latents,
                               const ExpansionCoefficients& coeffs, const ResidualOptions& options) {
    if (A.rows() != A.cols() || static_cast<std::size_t>(A.rows()) != latents.n())
        throw InvalidInput("matrix size does not match the latents");
    const auto n = A.rows();
    auto apply_A = [&A, n](const double* x, double* y) {
        Eigen::Map<VectorXd>(y, n).noalias() = A * Eigen::Map<const VectorXd>(x, n);
    };
    return residual_from_apply(apply_A, A.norm(), latents, coeffs, options);
}

std::uint64_t crossing_edge_count(const GraphSample& G, std::span<const int> labels) {
    require_labels(G.n, labels.size());
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < G.n; ++i)
        for (const auto j : G.neighbors_of(i))
            if (static_cast<std::size_t>(j) > i && labels[i] != labels[static_cast<std::size_t>(j)]) ++count;
    return count;
}

}  // namespace gmbm
