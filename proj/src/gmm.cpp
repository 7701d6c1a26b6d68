#include "noisekit/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

#include "noisekit/error.hpp"
#include "noisekit/rng.hpp"
#include "noisekit/stats.hpp"

namespace noisekit::gmm {

std::string covariance_name(CovarianceType t) {
    switch (t) {
        case CovarianceType::Full: return "full";
        case CovarianceType::Tied: return "tied";
        case CovarianceType::Diag: return "diag";
        case CovarianceType::Spherical: return "spherical";
    }
    return "full";
}

CovarianceType covariance_from_name(const std::string& name) {
    if (name == "full") return CovarianceType::Full;
    if (name == "tied") return CovarianceType::Tied;
    if (name == "diag") return CovarianceType::Diag;
    if (name == "spherical") return CovarianceType::Spherical;
    throw ValidationError("unknown covariance type '" + name + "'");
}

const Matrix& GmmModel::covariance_of(int k) const {
    if (covariance == CovarianceType::Full) return full_covs[static_cast<std::size_t>(k)];
    if (covariance == CovarianceType::Tied) return full_covs[0];
    throw ValidationError("covariance_of: model does not store matrix covariances");
}

namespace {

Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t m = 0; m < j; ++m) s -= l(i, m) * l(j, m);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw RuntimeError("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

void validate_fit_inputs(const Matrix& x, const GmmConfig& config) {
    if (config.n_components < 1) throw ValidationError("gmm: n_components must be >= 1");
    if (!(config.tol > 0.0)) throw ValidationError("gmm: tol must be > 0");
    if (config.max_iter < 1) throw ValidationError("gmm: max_iter must be >= 1");
    if (!(config.reg_covar > 0.0)) throw ValidationError("gmm: reg_covar must be > 0");
    if (config.n_init < 1) throw ValidationError("gmm: n_init must be >= 1");
    if (x.rows() < static_cast<std::size_t>(config.n_components))
        throw ValidationError("gmm: need at least as many examples (" + std::to_string(x.rows()) +
                              ") as components (" + std::to_string(config.n_components) + ")");
    for (const double v : x.data())
        if (!std::isfinite(v)) throw ValidationError("gmm: non-finite feature value");
}

// Weighted mean and covariance update from responsibilities.
GmmModel m_step(const Matrix& x, const Matrix& resp, const GmmConfig& config) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t n_comp = static_cast<std::size_t>(config.n_components);

    GmmModel model;
    model.n_components = config.n_components;
    model.dim = d;
    model.covariance = config.covariance;
    model.weights.assign(n_comp, 0.0);
    model.means = Matrix(n_comp, d);

    std::vector<Matrix> scatters(n_comp); // used by Full and Tied
    if (config.covariance == CovarianceType::Diag || config.covariance == CovarianceType::Spherical)
        model.diag_vars = Matrix(n_comp, d);

    std::optional<int> collapsed;
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n_comp); ++kk) {
        const std::size_t k = static_cast<std::size_t>(kk);
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += resp(i, k);
        if (mass < 1e-10) {
#pragma omp critical
            collapsed = static_cast<int>(k);
            continue;
        }
        model.weights[k] = mass / static_cast<double>(n);

        double* mu = model.means.row(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = resp(i, k);
            const double* xi = x.row(i);
            for (std::size_t j = 0; j < d; ++j) mu[j] += r * xi[j];
        }
        for (std::size_t j = 0; j < d; ++j) mu[j] /= mass;

        switch (config.covariance) {
            case CovarianceType::Full:
            case CovarianceType::Tied: {
                Matrix scatter(d, d);
                std::vector<double> diff(d);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp(i, k);
                    const double* xi = x.row(i);
                    for (std::size_t j = 0; j < d; ++j) diff[j] = xi[j] - mu[j];
                    for (std::size_t a = 0; a < d; ++a) {
                        double* row = scatter.row(a);
                        const double ra = r * diff[a];
                        for (std::size_t b = 0; b <= a; ++b) row[b] += ra * diff[b];
                    }
                }
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t b = a + 1; b < d; ++b) scatter(a, b) = scatter(b, a);
                scatters[k] = std::move(scatter);
                break;
            }
            case CovarianceType::Diag:
            case CovarianceType::Spherical: {
                double* var = model.diag_vars.row(k);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp(i, k);
                    const double* xi = x.row(i);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double diff = xi[j] - mu[j];
                        var[j] += r * diff * diff;
                    }
                }
                for (std::size_t j = 0; j < d; ++j) var[j] = var[j] / mass + config.reg_covar;
                break;
            }
        }
    }
    if (collapsed)
        throw RuntimeError("gmm: component " + std::to_string(*collapsed) +
                           " collapsed despite reg_covar");

    switch (config.covariance) {
        case CovarianceType::Full: {
            model.full_covs.resize(n_comp);
            for (std::size_t k = 0; k < n_comp; ++k) {
                double mass = model.weights[k] * static_cast<double>(n);
                Matrix cov = std::move(scatters[k]);
                for (double& v : cov.data()) v /= mass;
                for (std::size_t j = 0; j < d; ++j) cov(j, j) += config.reg_covar;
                model.full_covs[k] = std::move(cov);
            }
            break;
        }
        case CovarianceType::Tied: {
            Matrix cov(d, d);
            for (std::size_t k = 0; k < n_comp; ++k)
                for (std::size_t idx = 0; idx < cov.data().size(); ++idx)
                    cov.data()[idx] += scatters[k].data()[idx];
            for (double& v : cov.data()) v /= static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) cov(j, j) += config.reg_covar;
            model.full_covs.clear();
            model.full_covs.push_back(std::move(cov));
            break;
        }
        case CovarianceType::Diag:
            break;
        case CovarianceType::Spherical: {
            model.spherical_vars.assign(n_comp, 0.0);
            for (std::size_t k = 0; k < n_comp; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += model.diag_vars(k, j);
                model.spherical_vars[k] = s / static_cast<double>(d);
            }
            model.diag_vars = Matrix();
            break;
        }
    }
    return model;
}

} // namespace

kernels::PreparedMixture prepare(const GmmModel& model) {
    kernels::PreparedMixture mix;
    mix.dim = model.dim;
    const std::size_t n_comp = static_cast<std::size_t>(model.n_components);
    mix.components.resize(n_comp);

    Matrix tied_chol;
    double tied_log_det = 0.0;
    if (model.covariance == CovarianceType::Tied) {
        try {
            tied_chol = cholesky(model.full_covs[0]);
        } catch (const RuntimeError&) {
            throw RuntimeError("gmm: tied covariance lost positive definiteness");
        }
        for (std::size_t j = 0; j < model.dim; ++j)
            tied_log_det += 2.0 * std::log(tied_chol(j, j));
    }

    for (std::size_t k = 0; k < n_comp; ++k) {
        kernels::PreparedComponent& comp = mix.components[k];
        comp.log_weight = std::log(model.weights[k]);
        comp.mean.assign(model.means.row(k), model.means.row(k) + model.dim);
        switch (model.covariance) {
            case CovarianceType::Full: {
                comp.kind = kernels::DensityKind::Cholesky;
                try {
                    comp.chol = cholesky(model.full_covs[k]);
                } catch (const RuntimeError&) {
                    throw RuntimeError("gmm: component " + std::to_string(k) +
                                       " covariance lost positive definiteness");
                }
                comp.log_det = 0.0;
                for (std::size_t j = 0; j < model.dim; ++j)
                    comp.log_det += 2.0 * std::log(comp.chol(j, j));
                break;
            }
            case CovarianceType::Tied: {
                comp.kind = kernels::DensityKind::Cholesky;
                comp.chol = tied_chol;
                comp.log_det = tied_log_det;
                break;
            }
            case CovarianceType::Diag: {
                comp.kind = kernels::DensityKind::Diagonal;
                comp.variances.assign(model.diag_vars.row(k), model.diag_vars.row(k) + model.dim);
                comp.log_det = 0.0;
                for (const double v : comp.variances) comp.log_det += std::log(v);
                break;
            }
            case CovarianceType::Spherical: {
                comp.kind = kernels::DensityKind::Spherical;
                comp.variance = model.spherical_vars[k];
                comp.log_det = static_cast<double>(model.dim) * std::log(comp.variance);
                break;
            }
        }
    }
    return mix;
}

GmmModel init_params(const Matrix& x, const GmmConfig& config, std::uint64_t seed) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t n_comp = static_cast<std::size_t>(config.n_components);
    Rng rng(seed);

    // k-means++ seeding: each next center drawn proportionally to the squared
    // distance from the nearest already-chosen one.
    std::vector<std::size_t> centers;
    centers.push_back(rng.next_below(n));
    std::vector<double> dist2(n);
    auto sqdist = [&](std::size_t i, std::size_t c) {
        const double* a = x.row(i);
        const double* b = x.row(c);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = a[j] - b[j];
            s += diff * diff;
        }
        return s;
    };
    for (std::size_t i = 0; i < n; ++i) dist2[i] = sqdist(i, centers[0]);

    while (centers.size() < n_comp) {
        double total = 0.0;
        for (const double v : dist2) total += v;
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.next_below(n);
        } else {
            const double u = rng.next_double() * total;
            double running = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                running += dist2[i];
                if (running > u) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.push_back(chosen);
        for (std::size_t i = 0; i < n; ++i) dist2[i] = std::min(dist2[i], sqdist(i, chosen));
    }

    // Hard assignment to the nearest center (ties toward the lower index).
    std::vector<std::size_t> assign(n);
    std::vector<std::size_t> counts(n_comp, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_d = sqdist(i, centers[0]);
        for (std::size_t k = 1; k < n_comp; ++k) {
            const double dk = sqdist(i, centers[k]);
            if (dk < best_d) {
                best_d = dk;
                best = k;
            }
        }
        assign[i] = best;
        ++counts[best];
    }

    // Give every empty component the point farthest from its current center,
    // taken from a component that can spare one.
    for (std::size_t k = 0; k < n_comp; ++k) {
        while (counts[k] == 0) {
            std::size_t donor_point = n;
            double worst = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[assign[i]] <= 1) continue;
                const double di = sqdist(i, centers[assign[i]]);
                if (di > worst) {
                    worst = di;
                    donor_point = i;
                }
            }
            if (donor_point == n)
                throw RuntimeError("gmm: cannot seed " + std::to_string(n_comp) +
                                   " components from the data");
            --counts[assign[donor_point]];
            assign[donor_point] = k;
            ++counts[k];
        }
    }

    Matrix resp(n, n_comp);
    for (std::size_t i = 0; i < n; ++i) resp(i, assign[i]) = 1.0;
    return m_step(x, resp, config);
}

GmmModel em_run(const Matrix& x, GmmModel start, const GmmConfig& config) {
    const std::size_t n = x.rows();
    const std::size_t n_comp = static_cast<std::size_t>(config.n_components);

    GmmModel model = std::move(start);
    model.log_likelihood_trace.clear();
    model.converged = false;

    Matrix resp(n, n_comp);
    std::vector<double> log_dens(n);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter <= config.max_iter; ++iter) {
        const kernels::PreparedMixture mix = prepare(model);
        kernels::mixture_estep(x, mix, resp, log_dens);
        const double ll = pairwise_sum(log_dens) / static_cast<double>(n);
        model.log_likelihood_trace.push_back(ll);
        if (iter > 0 && ll - prev_ll < config.tol) {
            model.converged = true;
            break;
        }
        if (iter == config.max_iter) break;
        prev_ll = ll;
        GmmModel updated = m_step(x, resp, config);
        updated.log_likelihood_trace = std::move(model.log_likelihood_trace);
        model = std::move(updated);
    }
    return model;
}

GmmModel fit(const Matrix& x, const GmmConfig& config) {
    validate_fit_inputs(x, config);

    GmmModel best;
    bool have_best = false;
    std::optional<std::string> last_error;
    const std::uint64_t base = derive_seed(config.seed, "gmm-init");

    for (int attempt = 0; attempt < config.n_init; ++attempt) {
        try {
            GmmModel start = init_params(x, config, Rng(base).split(static_cast<std::uint64_t>(attempt)).seed());
            GmmModel candidate = em_run(x, std::move(start), config);
            if (!have_best ||
                candidate.log_likelihood_trace.back() > best.log_likelihood_trace.back()) {
                best = std::move(candidate);
                have_best = true;
            }
        } catch (const RuntimeError& ex) {
            last_error = ex.what();
        }
    }
    if (!have_best) throw RuntimeError("gmm: every initialization failed: " + *last_error);
    return best;
}

std::vector<double> log_density(const GmmModel& model, const Matrix& x) {
    if (x.cols() != model.dim)
        throw ValidationError("gmm: feature dimensionality " + std::to_string(x.cols()) +
                              " does not match model dim " + std::to_string(model.dim));
    Matrix resp(x.rows(), static_cast<std::size_t>(model.n_components));
    std::vector<double> log_dens(x.rows());
    const kernels::PreparedMixture mix = prepare(model);
    kernels::mixture_estep(x, mix, resp, log_dens);
    return log_dens;
}

Matrix responsibilities(const GmmModel& model, const Matrix& x) {
    if (x.cols() != model.dim)
        throw ValidationError("gmm: feature dimensionality mismatch");
    Matrix resp(x.rows(), static_cast<std::size_t>(model.n_components));
    std::vector<double> log_dens(x.rows());
    const kernels::PreparedMixture mix = prepare(model);
    kernels::mixture_estep(x, mix, resp, log_dens);
    return resp;
}

std::vector<double> score_noise(const GmmModel& model, const Matrix& x) {
    std::vector<double> scores = log_density(model, x);
    for (double& s : scores) s = -s;
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) {
        std::fill(scores.begin(), scores.end(), 0.5);
        return scores;
    }
    const double span = hi - lo;
    for (double& s : scores) s = (s - lo) / span;
    return scores;
}

void save_gmm(const GmmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write gmm file '" + path + "'");
    char buf[64];
    auto emit = [&](double v, bool last) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << (last ? "\n" : " ");
    };
    out << model.n_components << ' ' << model.dim << ' ' << covariance_name(model.covariance)
        << '\n';
    for (std::size_t k = 0; k < model.weights.size(); ++k)
        emit(model.weights[k], k + 1 == model.weights.size());
    for (std::size_t k = 0; k < model.means.rows(); ++k)
        for (std::size_t j = 0; j < model.dim; ++j)
            emit(model.means(k, j), j + 1 == model.dim);
    switch (model.covariance) {
        case CovarianceType::Full:
            for (const Matrix& cov : model.full_covs)
                for (std::size_t a = 0; a < model.dim; ++a)
                    for (std::size_t b = 0; b < model.dim; ++b)
                        emit(cov(a, b), b + 1 == model.dim);
            break;
        case CovarianceType::Tied:
            for (std::size_t a = 0; a < model.dim; ++a)
                for (std::size_t b = 0; b < model.dim; ++b)
                    emit(model.full_covs[0](a, b), b + 1 == model.dim);
            break;
        case CovarianceType::Diag:
            for (std::size_t k = 0; k < model.diag_vars.rows(); ++k)
                for (std::size_t j = 0; j < model.dim; ++j)
                    emit(model.diag_vars(k, j), j + 1 == model.dim);
            break;
        case CovarianceType::Spherical:
            for (std::size_t k = 0; k < model.spherical_vars.size(); ++k)
                emit(model.spherical_vars[k], k + 1 == model.spherical_vars.size());
            break;
    }
    if (!out) throw RuntimeError("write failed for gmm file '" + path + "'");
}

GmmModel load_gmm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open gmm file '" + path + "'");
    GmmModel model;
    std::string cov_name;
    if (!(in >> model.n_components >> model.dim >> cov_name) || model.n_components < 1)
        throw ValidationError("gmm file '" + path + "': bad header");
    model.covariance = covariance_from_name(cov_name);
    const std::size_t n_comp = static_cast<std::size_t>(model.n_components);

    auto read = [&](double& v) {
        if (!(in >> v)) throw ValidationError("gmm file '" + path + "': truncated");
    };
    model.weights.assign(n_comp, 0.0);
    for (double& w : model.weights) read(w);
    model.means = Matrix(n_comp, model.dim);
    for (double& v : model.means.data()) read(v);
    switch (model.covariance) {
        case CovarianceType::Full:
            model.full_covs.assign(n_comp, Matrix(model.dim, model.dim));
            for (Matrix& cov : model.full_covs)
                for (double& v : cov.data()) read(v);
            break;
        case CovarianceType::Tied:
            model.full_covs.assign(1, Matrix(model.dim, model.dim));
            for (double& v : model.full_covs[0].data()) read(v);
            break;
        case CovarianceType::Diag:
            model.diag_vars = Matrix(n_comp, model.dim);
            for (double& v : model.diag_vars.data()) read(v);
            break;
        case CovarianceType::Spherical:
            model.spherical_vars.assign(n_comp, 0.0);
            for (double& v : model.spherical_vars) read(v);
            break;
    }
    return model;
}

} // namespace noisekit::gmm
