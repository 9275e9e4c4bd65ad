#include "htev/ensembles.hpp"

#include <cmath>
#include <numeric>

#include "htev/errors.hpp"
#include "htev/rng.hpp"

namespace htev {

std::string to_string(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::Levy: return "Levy";
        case EnsembleKind::ExplodingMoments: return "ExplodingMoments";
        case EnsembleKind::ErdosRenyi: return "ErdosRenyi";
        case EnsembleKind::GaussianBaseline: return "GaussianBaseline";
        case EnsembleKind::PermutationBaseline: return "PermutationBaseline";
    }
    return "?";
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
    for (auto k : {EnsembleKind::Levy, EnsembleKind::ExplodingMoments, EnsembleKind::ErdosRenyi,
                   EnsembleKind::GaussianBaseline, EnsembleKind::PermutationBaseline})
        if (to_string(k) == s) return k;
    throw ParameterError("unknown ensemble kind '" + s + "'");
}

void EnsembleSpec::validate() const {
    switch (kind) {
        case EnsembleKind::Levy:
            if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("Levy alpha must lie in (0,2)");
            if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
            break;
        case EnsembleKind::GaussianBaseline:
            if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
            break;
        case EnsembleKind::ErdosRenyi:
            if (!(p > 0.0)) throw ParameterError("Erdos-Renyi p must be positive");
            break;
        case EnsembleKind::ExplodingMoments: {
            if (m_atoms.empty()) throw ParameterError("m_atoms must be nonempty");
            double total = 0.0;
            for (const auto& at : m_atoms) {
                if (!(at.weight >= 0.0) || !(at.location >= 0.0))
                    throw ParameterError("atoms need weight >= 0 and location >= 0");
                total += at.weight;
            }
            if (!(total > 0.0)) throw ParameterError("m must have positive total weight");
            break;
        }
        case EnsembleKind::PermutationBaseline: break;
    }
}

EnsembleSpec EnsembleSpec::erdos_renyi(double p, std::uint64_t seed) {
    EnsembleSpec s;
    s.kind = EnsembleKind::ErdosRenyi;
    s.p = p;
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::levy(double alpha, double sigma, std::uint64_t seed) {
    EnsembleSpec s;
    s.kind = EnsembleKind::Levy;
    s.alpha = alpha;
    s.sigma = sigma;
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::exploding(std::vector<Atom> atoms, std::uint64_t seed) {
    EnsembleSpec s;
    s.kind = EnsembleKind::ExplodingMoments;
    s.m_atoms = std::move(atoms);
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::gaussian(double sigma, std::uint64_t seed) {
    EnsembleSpec s;
    s.kind = EnsembleKind::GaussianBaseline;
    s.sigma = sigma;
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::permutation(std::uint64_t seed) {
    EnsembleSpec s;
    s.kind = EnsembleKind::PermutationBaseline;
    s.seed = seed;
    return s;
}

double sample_entry(const EnsembleSpec& spec, int n, CounterRng& rng) {
    const double dn = n;
    switch (spec.kind) {
        case EnsembleKind::Levy: {
            // symmetric Pareto, P(|x| >= u) = min(1, u^-alpha)
            double mag = std::pow(rng.uniform_pos(), -1.0 / spec.alpha);
            double sign = (rng() >> 63) ? -1.0 : 1.0;
            return spec.sigma * sign * mag / std::pow(dn, 1.0 / spec.alpha);
        }
        case EnsembleKind::ErdosRenyi: {
            double q = spec.p / dn;
            return (rng.uniform() < q ? 1.0 : 0.0) - q;
        }
        case EnsembleKind::GaussianBaseline:
            return spec.sigma * rng.normal() / std::sqrt(dn);
        case EnsembleKind::ExplodingMoments: {
            // atom x > 0: value +-sqrt(x) with probability w/(2 x n) each,
            // so that n E[a^(2k)] = sum w x^(k-1); atoms at 0 add a Gaussian part
            double u = rng.uniform();
            double value = 0.0;
            double gauss_var = 0.0;
            double acc = 0.0;
            bool hit = false;
            for (const auto& at : spec.m_atoms) {
                if (at.location == 0.0) {
                    gauss_var += at.weight / dn;
                    continue;
                }
                double prob = at.weight / (at.location * dn);
                if (!hit && u < acc + prob) {
                    value = (u < acc + 0.5 * prob) ? std::sqrt(at.location) : -std::sqrt(at.location);
                    hit = true;
                }
                acc += prob;
            }
            if (gauss_var > 0.0) value += std::sqrt(gauss_var) * rng.normal();
            return value;
        }
        case EnsembleKind::PermutationBaseline:
            break;
    }
    throw ParameterError("no entry law for PermutationBaseline");
}

namespace {

void check_exploding_size(const EnsembleSpec& spec, int n) {
    double total = 0.0;
    for (const auto& at : spec.m_atoms)
        if (at.location > 0.0) total += at.weight / (at.location * n);
    if (total > 1.0) throw ParameterError("n too small for the atomic measure (total jump probability > 1)");
}

}  // namespace

SymmetricMatrix sample_matrix(const EnsembleSpec& spec, int n, std::uint64_t replicate) {
    spec.validate();
    if (n < 2) throw ParameterError("n must be at least 2");
    if (spec.kind == EnsembleKind::ExplodingMoments) check_exploding_size(spec, n);
    if (spec.kind == EnsembleKind::ErdosRenyi && spec.p > n)
        throw ParameterError("Erdos-Renyi p must not exceed n");

    CounterRng rng(stream_key(spec.seed, static_cast<std::uint64_t>(n), replicate, 1));
    SymmetricMatrix m;
    m.a = Eigen::MatrixXd::Zero(n, n);
    if (spec.kind == EnsembleKind::PermutationBaseline) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        for (int i = 0; i < n; ++i) m.a(i, perm[i]) = 1.0;
        return m;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
            double v = sample_entry(spec, n, rng);
            m.a(i, j) = v;
            m.a(j, i) = v;
        }
    }
    return m;
}

std::vector<CharExponentEstimate> estimate_char_exponent(const EnsembleSpec& spec, int n,
                                                         int n_samples,
                                                         const std::vector<cplx>& lambdas) {
    spec.validate();
    if (spec.kind == EnsembleKind::PermutationBaseline)
        throw ParameterError("PermutationBaseline has no entry law");
    if (n_samples < 1000) throw ParameterError("n_samples must be at least 1000");
    for (const auto& l : lambdas)
        if (l.imag() > 0.0) throw DomainError("lambda must lie in the closed lower half-plane");
    if (spec.kind == EnsembleKind::ExplodingMoments) check_exploding_size(spec, n);

    CounterRng rng(stream_key(spec.seed, static_cast<std::uint64_t>(n), 0, 2));
    std::vector<double> sq(n_samples);
    for (auto& v : sq) {
        double a = sample_entry(spec, n, rng);
        v = a * a;
    }
    std::vector<CharExponentEstimate> out;
    const cplx I(0.0, 1.0);
    for (const auto& l : lambdas) {
        CharExponentEstimate e;
        e.lambda = l;
        if (l == cplx(0.0)) {
            out.push_back(e);
            continue;
        }
        double sr = 0, si = 0, sr2 = 0, si2 = 0;
        for (double v : sq) {
            cplx x = static_cast<double>(n) * (std::exp(-I * l * v) - 1.0);
            sr += x.real();
            si += x.imag();
            sr2 += x.real() * x.real();
            si2 += x.imag() * x.imag();
        }
        double N = n_samples;
        e.value = cplx(sr / N, si / N);
        e.stderr_re = std::sqrt(std::max(0.0, sr2 / N - (sr / N) * (sr / N)) / (N - 1));
        e.stderr_im = std::sqrt(std::max(0.0, si2 / N - (si / N) * (si / N)) / (N - 1));
        out.push_back(e);
    }
    return out;
}

}  // namespace htev
