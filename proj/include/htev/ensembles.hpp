#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace htev {

using cplx = std::complex<double>;

enum class EnsembleKind { Levy, ExplodingMoments, ErdosRenyi, GaussianBaseline, PermutationBaseline };

std::string to_string(EnsembleKind k);
EnsembleKind ensemble_kind_from_string(const std::string& s);

struct Atom {
    double weight = 0.0;
    double location = 0.0;
};

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::ErdosRenyi;
    double alpha = 1.0;
    double sigma = 1.0;
    double p = 2.0;
    std::vector<Atom> m_atoms;
    std::uint64_t seed = 0;

    void validate() const;

    static EnsembleSpec erdos_renyi(double p, std::uint64_t seed = 0);
    static EnsembleSpec levy(double alpha, double sigma = 1.0, std::uint64_t seed = 0);
    static EnsembleSpec exploding(std::vector<Atom> atoms, std::uint64_t seed = 0);
    static EnsembleSpec gaussian(double sigma = 1.0, std::uint64_t seed = 0);
    static EnsembleSpec permutation(std::uint64_t seed = 0);
};

// Dense symmetric storage. For PermutationBaseline the matrix holds a
// permutation matrix, which is not symmetric; it is consumed directly as
// an overlap matrix.
struct SymmetricMatrix {
    Eigen::MatrixXd a;
    int n() const { return static_cast<int>(a.rows()); }
};

SymmetricMatrix sample_matrix(const EnsembleSpec& spec, int n, std::uint64_t replicate);

struct CharExponentEstimate {
    cplx lambda;
    cplx value;
    double stderr_re = 0.0;
    double stderr_im = 0.0;
};

std::vector<CharExponentEstimate> estimate_char_exponent(const EnsembleSpec& spec, int n,
                                                         int n_samples,
                                                         const std::vector<cplx>& lambdas);

// draw a single off-diagonal entry (already scaled for size n)
double sample_entry(const EnsembleSpec& spec, int n, class CounterRng& rng);

}  // namespace htev
