#include "frag/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "frag/errors.hpp"

namespace frag {
namespace {

// GSL aborts on error by default; switch to return codes once per process.
const int g_handler_off = [] {
  gsl_set_error_handler_off();
  return 0;
}();

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};
using WorkspacePtr = std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>;

// Workspaces are reused per thread; nested integrals (limit measure over a
// density) take distinct depth slots.
gsl_integration_workspace* acquire_workspace(std::size_t depth, std::size_t limit) {
  thread_local std::vector<WorkspacePtr> pool;
  if (pool.size() <= depth) pool.resize(depth + 1);
  if (!pool[depth]) {
    pool[depth].reset(gsl_integration_workspace_alloc(limit));
    if (!pool[depth]) raise(Errc::internal, "failed to allocate integration workspace");
  }
  return pool[depth].get();
}

thread_local std::size_t g_depth = 0;

double call_target(double x, void* params) {
  const auto* f = static_cast<const std::function<double(double)>*>(params);
  return (*f)(x);
}

double run_qag(const std::function<double(double)>& f, double a, double b,
               const QuadratureOptions& opts, bool singular,
               const std::vector<double>* points) {
  gsl_function target;
  target.function = &call_target;
  target.params = const_cast<void*>(static_cast<const void*>(&f));

  gsl_integration_workspace* ws = acquire_workspace(g_depth, opts.limit);
  ++g_depth;
  double result = 0.0, abserr = 0.0;
  int status;
  if (points) {
    std::vector<double> pts = *points;
    std::erase_if(pts, [&](double p) { return !(p > a && p < b); });
    pts.push_back(a);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    status = gsl_integration_qagp(&target, pts.data(), pts.size(), opts.abs_tol, opts.rel_tol,
                                  opts.limit, ws, &result, &abserr);
  } else if (singular) {
    status = gsl_integration_qags(&target, a, b, opts.abs_tol, opts.rel_tol, opts.limit, ws,
                                  &result, &abserr);
  } else {
    status = gsl_integration_qag(&target, a, b, opts.abs_tol, opts.rel_tol, opts.limit,
                                 GSL_INTEG_GAUSS31, ws, &result, &abserr);
  }
  --g_depth;

  if (!std::isfinite(result)) {
    raise(Errc::non_integrable, "integral is not finite");
  }
  if (status == GSL_SUCCESS) return result;
  // Roundoff saturation with a small achieved error is still a usable answer.
  if (status == GSL_EROUND && abserr <= 1e-8 * std::max(1.0, std::fabs(result))) {
    return result;
  }
  raise(Errc::non_integrable,
        std::string("integral failed to converge (") + gsl_strerror(status) + ")");
}

}  // namespace

double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  return run_qag(f, a, b, opts, false, nullptr);
}

double integrate_interval_singular(const std::function<double(double)>& f, double a, double b,
                                   const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  return run_qag(f, a, b, opts, true, nullptr);
}

double integrate_with_breakpoints(const std::function<double(double)>& f, double a, double b,
                                  std::vector<double> points, const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  return run_qag(f, a, b, opts, false, &points);
}

double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b) {
  // Kronrod nodes/weights for [-1, 1], positive half; node 0 is the midpoint.
  static const double kNodes[8] = {
      0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
      0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
  static const double kWeights[8] = {
      0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
      0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = kWeights[7] * f(mid);
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kNodes[i];
    acc += kWeights[i] * (f(mid - dx) + f(mid + dx));
  }
  return acc * half;
}

}  // namespace frag
