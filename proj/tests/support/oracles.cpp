#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hexflow::oracle {

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_var(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s / static_cast<double>(xs.size() - 1);
}

double call_cost(double in, double out, std::span<const InstanceProfile> cluster) {
  double total = 0.0;
  for (const auto& m : cluster) total += in / m.prefill_rate + out / m.decode_rate;
  return total / static_cast<double>(cluster.size());
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // Use the symmetry relation where the fraction converges fastest.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_upper(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

Welch welch(std::span<const double> fresh, std::span<const double> ref) {
  Welch w;
  const double ma = mean_of(fresh);
  const double mb = mean_of(ref);
  const double na = static_cast<double>(fresh.size());
  const double nb = static_cast<double>(ref.size());
  const double va = sample_var(fresh, ma) / na;
  const double vb = sample_var(ref, mb) / nb;
  w.t = (ma - mb) / std::sqrt(va + vb);
  w.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  w.p = student_t_upper(w.t, w.df);
  return w;
}

InstanceId wb_choice(const DispatchRecord& rec) {
  const double alpha = rec.config.alpha();
  const double beta = rec.config.c_ref() * rec.config.q_ref();
  InstanceId best = kNoInstance;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_queue = 0.0;
  for (InstanceId i = 0; i < rec.profiles.size(); ++i) {
    bool skip = false;
    for (InstanceId x : rec.excluded) skip = skip || x == i;
    if (skip) continue;
    const auto& p = rec.profiles[i];
    auto cost = [&p](const InferenceRequest& r) {
      return static_cast<double>(r.input_tokens) / p.prefill_rate +
             static_cast<double>(r.est_output_tokens) / p.decode_rate;
    };
    double queue = 0.0;
    for (const auto& r : rec.queues[i]) queue += cost(r);
    const double q = queue > 0.0 ? queue : 1e-3;
    const double s = (1.0 - alpha) * beta / q - alpha * cost(rec.request);
    if (best == kNoInstance || s > best_score || (s == best_score && queue < best_queue)) {
      best = i;
      best_score = s;
      best_queue = queue;
    }
  }
  return best;
}

RequestId urgency_choice(const AdmissionRecord& rec) {
  const auto& p = rec.profile;
  const InferenceRequest* best = nullptr;
  double best_u = 0.0;
  for (const auto& r : rec.pending) {
    const double comp = static_cast<double>(r.input_tokens) / p.prefill_rate +
                        static_cast<double>(r.est_output_tokens) / p.decode_rate;
    const double waited = rec.time - r.enqueue_time;
    const double u = comp - (r.slo_budget - waited);
    const bool better =
        best == nullptr || u > best_u ||
        (u == best_u && (r.enqueue_time < best->enqueue_time ||
                         (r.enqueue_time == best->enqueue_time && r.request_id < best->request_id)));
    if (better) {
      best = &r;
      best_u = u;
    }
  }
  if (best == nullptr) throw std::runtime_error("admission from an empty queue");
  return best->request_id;
}

double stage_mean_cost(const StageTemplate& s, std::span<const InstanceProfile> cluster,
                       const EstimatorConfig& est) {
  const double in = std::max(1.0, std::round(s.input.mean));
  const double out = std::max(1.0, std::round(est.stage_mean_output[static_cast<int>(s.stage)]));
  return call_cost(in, out, cluster);
}

double projected_future_cost(const WorkflowTemplate& tpl, std::span<const InstanceProfile> cluster,
                             const EstimatorConfig& est, std::uint32_t stage_index, std::uint32_t call_index) {
  double total = 0.0;
  for (std::size_t s = stage_index; s < tpl.stages.size(); ++s) {
    const StageTemplate& st = tpl.stages[s];
    const double c = stage_mean_cost(st, cluster, est);
    double calls = 0.0;
    if (st.stage == StageKind::SelfCorrection) {
      calls = st.max_iterations;
    } else if (st.parallelism > 1) {
      calls = 1.0;
    } else {
      calls = st.calls;
    }
    if (s == stage_index) {
      // Calls of the current stage after this one; siblings run alongside.
      calls = st.parallelism > 1 ? 0.0 : std::max(0.0, calls - call_index - 1.0);
    }
    total += calls * c;
  }
  return total;
}

}  // namespace hexflow::oracle
