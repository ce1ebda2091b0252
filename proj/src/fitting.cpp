#include "stokes/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stokes {

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

ChannelModel apply_parameters(const ChannelModel& base, const std::vector<std::string>& names,
                              const Vec& values) {
    ChannelModel m = base;
    for (size_t j = 0; j < names.size(); ++j) {
        const std::string& name = names[j];
        const double v = values[j];
        LineComponent* comp = nullptr;
        if (name == "background") {
            m.background = v;
        } else if (name == "coherent_amplitude") {
            comp = m.find(LineKind::coherent_stokes);
            if (comp) comp->amplitude = v;
        } else if (name == "fluorescence_amplitude") {
            comp = m.find(LineKind::fluorescence_upper);
            if (comp) comp->amplitude = v;
        } else if (name == "fluorescence_lower_amplitude") {
            comp = m.find(LineKind::fluorescence_lower);
            if (comp) comp->amplitude = v;
        } else if (name == "leakage_amplitude") {
            comp = m.find(LineKind::laser_leakage);
            if (comp) comp->amplitude = v;
        } else if (name == "coherent_center") {
            comp = m.find(LineKind::coherent_stokes);
            if (comp) comp->center = v;
        } else if (name == "fluorescence_center") {
            comp = m.find(LineKind::fluorescence_upper);
            if (comp) comp->center = v;
            // the doublet moves as one
            if (LineComponent* lo = m.find(LineKind::fluorescence_lower))
                lo->center = v - m.excited_split;
        } else if (name == "gaussian_fwhm") {
            for (auto& c : m.components)
                if (c.kind == LineKind::fluorescence_upper || c.kind == LineKind::fluorescence_lower)
                    c.profile.gaussian_fwhm = v;
        } else {
            throw invalid_parameter("fit: unknown parameter '" + name + "'");
        }
        if (name != "background" && name != "gaussian_fwhm" && !comp)
            throw invalid_parameter("fit: parameter '" + name + "' targets a missing component");
    }
    return m;
}

std::function<Vec(const Vec&)> make_model(const FitProblem& problem,
                                          const std::vector<std::string>& names) {
    if (problem.kind == FitModelKind::intensity_scan) {
        return [&problem, names](const Vec& p) {
            const ChannelModel m = apply_parameters(problem.base_model, names, p);
            return predict_mean_counts_at(m, problem.data.x, problem.response).total;
        };
    }
    // g2_scan: the chi1 profile is pinned by base_model, the single shape
    // parameter scales the degradation factor.
    const MeanTrace trace = predict_mean_counts_at(problem.base_model, problem.data.x, problem.response);
    const Vec chi = snr_profile(trace);
    Vec weight(chi.size());
    for (size_t i = 0; i < chi.size(); ++i) {
        if (std::isinf(chi[i]))
            weight[i] = 1.0;
        else
            weight[i] = chi[i] > 0.0 ? chi[i] / (1.0 + chi[i]) : 0.0;
    }
    size_t a_index = names.size();
    for (size_t j = 0; j < names.size(); ++j) {
        if (names[j] == "correlation_amplitude")
            a_index = j;
        else
            throw invalid_parameter("fit: unknown g2_scan parameter '" + names[j] + "'");
    }
    if (a_index == names.size())
        throw invalid_parameter("fit: g2_scan needs the correlation_amplitude parameter");
    return [weight, a_index](const Vec& p) {
        Vec out(weight.size());
        for (size_t i = 0; i < weight.size(); ++i) out[i] = 1.0 + p[a_index] * weight[i];
        return out;
    };
}

Vec numeric_jacobian_column(const std::function<Vec(const Vec&)>& fn, Vec p, size_t j,
                            double scale_ref) {
    // step relative to the larger of the current value and a unit-order floor;
    // a parameter sitting at zero (a line center) still gets a usable step
    const double h0 = std::cbrt(std::numeric_limits<double>::epsilon()) *
                      std::max({std::abs(p[j]), scale_ref, 1.0});
    const double pj = p[j];
    volatile double hi = pj + h0;
    volatile double lo = pj - h0;
    const double two_h = hi - lo;
    p[j] = hi;
    Vec fp;
    try {
        fp = fn(p);
        p[j] = lo;
        const Vec fm = fn(p);
        for (size_t i = 0; i < fp.size(); ++i) fp[i] = (fp[i] - fm[i]) / two_h;
    } catch (const std::exception& e) {
        throw invalid_parameter("jacobian: model evaluation failed near parameter index " +
                                std::to_string(j) + ": " + e.what());
    }
    return fp;
}

Mat numeric_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& p, const Vec& scale_ref,
                     size_t n_points) {
    Mat jac(n_points, Vec(p.size(), 0.0));
    for (size_t j = 0; j < p.size(); ++j) {
        const Vec col = numeric_jacobian_column(fn, p, j, scale_ref[j]);
        for (size_t i = 0; i < n_points; ++i) jac[i][j] = col[i];
    }
    return jac;
}

// Cholesky solve of (A + lambda diag(A)) x = b; returns false if not positive
// definite.
bool cholesky_solve(Mat a, double lambda, Vec b, Vec& x) {
    const size_t n = a.size();
    for (size_t i = 0; i < n; ++i) a[i][i] *= (1.0 + lambda);
    Mat l(n, Vec(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // forward then backward substitution
    for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
        b[i] /= l[i][i];
    }
    x.assign(n, 0.0);
    for (size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (size_t k = ii + 1; k < n; ++k) s -= l[k][ii] * x[k];
        x[ii] = s / l[ii][ii];
    }
    return true;
}

// Jacobi eigendecomposition for the tiny symmetric normal matrices.
void jacobi_eigen(Mat a, Vec& eigenvalues, Mat& eigenvectors) {
    const size_t n = a.size();
    eigenvectors.assign(n, Vec(n, 0.0));
    for (size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-28) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
                    eigenvectors[k][p] = c * vkp - s * vkq;
                    eigenvectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

[[noreturn]] void throw_degenerate(const Mat& normal, const std::vector<std::string>& names) {
    Vec eigenvalues;
    Mat eigenvectors;
    jacobi_eigen(normal, eigenvalues, eigenvectors);
    size_t worst = 0;
    for (size_t i = 1; i < eigenvalues.size(); ++i)
        if (eigenvalues[i] < eigenvalues[worst]) worst = i;
    std::ostringstream msg;
    msg << "degenerate fit: unconstrained parameter combination";
    for (size_t i = 0; i < names.size(); ++i) {
        const double c = eigenvectors[i][worst];
        if (std::abs(c) > 1e-3) msg << (c >= 0 ? " +" : " -") << std::abs(c) << "*" << names[i];
    }
    throw degenerate_fit_error(msg.str());
}

double chi_square_of(const Vec& y, const Vec& f, const Vec& sigma) {
    double chi2 = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double r = (y[i] - f[i]) / sigma[i];
        chi2 += r * r;
    }
    return chi2;
}

}  // namespace

void FitData::validate() const {
    if (x.size() != y.size() || x.size() != sigma.size())
        throw dimension_error("FitData: x, y, sigma must have equal length");
    if (x.size() < 2) throw invalid_parameter("FitData: needs at least two points");
    for (double s : sigma)
        if (!(s > 0.0)) throw invalid_parameter("FitData: all sigmas must be > 0");
}

void FitProblem::validate() const {
    data.validate();
    if (free_parameters.empty()) throw invalid_parameter("FitProblem: needs >= 1 free parameter");
    if (data.x.size() < 2 * free_parameters.size())
        throw invalid_parameter("FitProblem: needs >= 2x more points than free parameters");
    for (const auto& p : free_parameters)
        if (p.log_scale && !(p.value > 0.0))
            throw invalid_parameter("FitProblem: log-scale parameter '" + p.name +
                                    "' needs a positive initial value");
    if (kind == FitModelKind::intensity_scan) base_model.validate();
}

bool FitResult::has(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

double FitResult::value(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw invalid_parameter("FitResult: no parameter '" + name + "'");
}

double FitResult::sigma(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[i];
    throw invalid_parameter("FitResult: no parameter '" + name + "'");
}

double FitResult::covariance_of(const std::string& a, const std::string& b) const {
    size_t ia = names.size(), ib = names.size();
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == a) ia = i;
        if (names[i] == b) ib = i;
    }
    if (ia == names.size() || ib == names.size())
        throw invalid_parameter("FitResult: unknown parameter in covariance query");
    return covariance[ia][ib];
}

FitResult least_squares(const LsqProblem& problem) {
    problem.data.validate();
    const size_t n = problem.data.x.size();
    const size_t np = problem.parameters.size();
    if (np < 1) throw invalid_parameter("least_squares: needs >= 1 parameter");
    if (n < 2 * np)
        throw invalid_parameter("least_squares: needs >= 2x more points than parameters");

    std::vector<std::string> names(np);
    Vec p(np), scale_ref(np);
    std::vector<bool> log_scale(np);
    for (size_t j = 0; j < np; ++j) {
        names[j] = problem.parameters[j].name;
        p[j] = problem.parameters[j].value;
        log_scale[j] = problem.parameters[j].log_scale;
        scale_ref[j] = std::max(std::abs(p[j]), 1e-8);
        if (log_scale[j] && !(p[j] > 0.0))
            throw invalid_parameter("least_squares: log-scale parameter '" + names[j] +
                                    "' needs a positive value");
    }

    const auto& y = problem.data.y;
    const auto& sigma = problem.data.sigma;

    Vec f = problem.model(p);  // initial evaluation failures propagate
    if (f.size() != n) throw dimension_error("least_squares: model size mismatch");
    double chi2 = chi_square_of(y, f, sigma);

    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    std::string message = "iteration limit reached";

    for (iter = 1; iter <= 500 && !converged; ++iter) {
        const Mat jac_p = numeric_jacobian(problem.model, p, scale_ref, n);
        // chain rule into log space where requested
        Mat jac(n, Vec(np));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < np; ++j) jac[i][j] = jac_p[i][j] * (log_scale[j] ? p[j] : 1.0);

        Mat normal(np, Vec(np, 0.0));
        Vec grad(np, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double w = 1.0 / (sigma[i] * sigma[i]);
            const double r = y[i] - f[i];
            for (size_t a = 0; a < np; ++a) {
                grad[a] += w * jac[i][a] * r;
                for (size_t b = a; b < np; ++b) normal[a][b] += w * jac[i][a] * jac[i][b];
            }
        }
        for (size_t a = 0; a < np; ++a)
            for (size_t b = 0; b < a; ++b) normal[a][b] = normal[b][a];
        for (size_t a = 0; a < np; ++a)
            if (normal[a][a] == 0.0) throw_degenerate(normal, names);

        bool accepted = false;
        while (!accepted) {
            Vec delta;
            if (!cholesky_solve(normal, lambda, grad, delta)) {
                lambda *= 3.0;
                if (lambda > 1e12) throw_degenerate(normal, names);
                continue;
            }
            double max_rel_step = 0.0;
            Vec p_try(np);
            for (size_t j = 0; j < np; ++j) {
                if (log_scale[j]) {
                    p_try[j] = p[j] * std::exp(std::clamp(delta[j], -20.0, 20.0));
                    max_rel_step = std::max(max_rel_step, std::abs(delta[j]));
                } else {
                    p_try[j] = p[j] + delta[j];
                    max_rel_step =
                        std::max(max_rel_step, std::abs(delta[j]) / std::max(std::abs(p[j]), 1.0));
                }
            }
            if (max_rel_step < 1e-8) {
                converged = true;
                message = "parameter step below 1e-8";
                break;
            }
            bool eval_ok = true;
            Vec f_try;
            try {
                f_try = problem.model(p_try);
            } catch (const std::exception&) {
                eval_ok = false;
            }
            const double chi2_try = eval_ok ? chi_square_of(y, f_try, sigma)
                                            : std::numeric_limits<double>::infinity();
            if (eval_ok && chi2_try <= chi2) {
                const double drop = chi2 - chi2_try;
                p = p_try;
                f = f_try;
                chi2 = chi2_try;
                lambda = std::max(lambda / 2.0, 1e-12);
                accepted = true;
                if (drop < 1e-10 * std::max(chi2, 1e-30)) {
                    converged = true;
                    message = "relative chi-square change below 1e-10";
                }
            } else {
                lambda *= 3.0;
                if (lambda > 1e12) {
                    converged = true;
                    message = "no downhill step available";
                    accepted = true;  // leave the loop with the current optimum
                }
            }
        }
    }

    // covariance from the undamped normal matrix at the optimum
    const Mat jac_p = numeric_jacobian(problem.model, p, scale_ref, n);
    Mat jac(n, Vec(np));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < np; ++j) jac[i][j] = jac_p[i][j] * (log_scale[j] ? p[j] : 1.0);
    Mat normal(np, Vec(np, 0.0));
    for (size_t i = 0; i < n; ++i) {
        const double w = 1.0 / (sigma[i] * sigma[i]);
        for (size_t a = 0; a < np; ++a)
            for (size_t b = a; b < np; ++b) normal[a][b] += w * jac[i][a] * jac[i][b];
    }
    for (size_t a = 0; a < np; ++a)
        for (size_t b = 0; b < a; ++b) normal[a][b] = normal[b][a];

    Vec eigenvalues;
    Mat eigenvectors;
    jacobi_eigen(normal, eigenvalues, eigenvectors);
    double lambda_max = 0.0;
    for (double v : eigenvalues) lambda_max = std::max(lambda_max, v);
    for (double v : eigenvalues)
        if (!(v > 1e-12 * lambda_max)) throw_degenerate(normal, names);

    Mat cov_q(np, Vec(np, 0.0));
    for (size_t a = 0; a < np; ++a)
        for (size_t b = 0; b < np; ++b)
            for (size_t k = 0; k < np; ++k)
                cov_q[a][b] += eigenvectors[a][k] * eigenvectors[b][k] / eigenvalues[k];

    FitResult result;
    result.names = names;
    result.values = p;
    result.iterations = iter;
    result.converged = converged;
    result.message = message;
    result.chi_square = chi2;
    result.reduced_chi_square = chi2 / static_cast<double>(n - np);
    result.residuals.resize(n);
    for (size_t i = 0; i < n; ++i) result.residuals[i] = y[i] - f[i];

    const double scale = problem.data.unit_weights ? result.reduced_chi_square : 1.0;
    result.covariance.assign(np, Vec(np, 0.0));
    result.sigmas.resize(np);
    for (size_t a = 0; a < np; ++a) {
        const double da = log_scale[a] ? p[a] : 1.0;
        for (size_t b = 0; b < np; ++b) {
            const double db = log_scale[b] ? p[b] : 1.0;
            // symmetrize against roundoff in the column solves
            result.covariance[a][b] = scale * da * db * 0.5 * (cov_q[a][b] + cov_q[b][a]);
        }
        result.sigmas[a] = std::sqrt(std::max(result.covariance[a][a], 0.0));
    }
    if (problem.data.unit_weights) result.message += " (covariance scaled by reduced chi-square)";
    return result;
}

FitResult fit(const FitProblem& problem) {
    problem.validate();
    std::vector<std::string> names(problem.free_parameters.size());
    for (size_t j = 0; j < names.size(); ++j) names[j] = problem.free_parameters[j].name;

    LsqProblem lsq;
    lsq.model = make_model(problem, names);
    lsq.data = problem.data;
    lsq.parameters = problem.free_parameters;

    FitResult result = least_squares(lsq);
    result.fitted_model = problem.kind == FitModelKind::intensity_scan
                              ? apply_parameters(problem.base_model, names, result.values)
                              : problem.base_model;
    return result;
}

std::vector<std::vector<double>> jacobian(const FitProblem& problem, const std::vector<double>& at) {
    problem.validate();
    if (at.size() != problem.free_parameters.size())
        throw dimension_error("jacobian: wrong number of parameter values");
    std::vector<std::string> names(problem.free_parameters.size());
    Vec scale_ref(at.size());
    for (size_t j = 0; j < names.size(); ++j) {
        names[j] = problem.free_parameters[j].name;
        scale_ref[j] = std::max(std::abs(problem.free_parameters[j].value), 1e-8);
    }
    const auto model = make_model(problem, names);
    return numeric_jacobian(model, at, scale_ref, problem.data.x.size());
}

Separation peak_separation(const FitResult& result) {
    const LineComponent* coh = result.fitted_model.find(LineKind::coherent_stokes);
    const LineComponent* flu = result.fitted_model.find(LineKind::fluorescence_upper);
    if (!coh || !flu)
        throw invalid_parameter(
            "peak_separation: fit lacks a coherent or fluorescence_upper component");

    const bool has_c = result.has("coherent_center");
    const bool has_f = result.has("fluorescence_center");
    const double cc = has_c ? result.value("coherent_center") : coh->center;
    const double cf = has_f ? result.value("fluorescence_center") : flu->center;
    double var = 0.0;
    if (has_c) var += result.sigma("coherent_center") * result.sigma("coherent_center");
    if (has_f) var += result.sigma("fluorescence_center") * result.sigma("fluorescence_center");
    if (has_c && has_f) var -= 2.0 * result.covariance_of("coherent_center", "fluorescence_center");

    Separation sep;
    sep.value = std::abs(cc - cf);
    sep.sigma = std::sqrt(std::max(var, 0.0));
    return sep;
}

}  // namespace stokes
