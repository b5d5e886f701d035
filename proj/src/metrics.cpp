#include "drysep/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "drysep/errors.hpp"

namespace drysep {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_shapes(const std::vector<double>& predicted, const std::vector<double>& target) {
  if (predicted.size() != target.size()) {
    throw DataError("metric: shape mismatch (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(target.size()) + ")");
  }
  if (predicted.empty()) throw DataError("metric: empty inputs");
}

}  // namespace

double sispnr(const std::vector<double>& predicted, const std::vector<double>& target) {
  check_shapes(predicted, target);
  const double target_energy = dot(target, target);
  if (target_energy == 0.0) throw DataError("sispnr: all-zero reference");

  const double proj = dot(predicted, target) / target_energy;
  // s_target = proj * target; e_noise = predicted - s_target
  double st_energy = 0.0, noise_energy = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double st = proj * target[i];
    const double e = predicted[i] - st;
    st_energy += st * st;
    noise_energy += e * e;
  }
  if (st_energy == 0.0) return -kMetricCapDb;
  if (noise_energy / st_energy < 1e-15) return kMetricCapDb;
  const double db = 10.0 * std::log10(st_energy / noise_energy);
  return std::clamp(db, -kMetricCapDb, kMetricCapDb);
}

double spdr(const std::vector<double>& predicted, const std::vector<double>& target) {
  check_shapes(predicted, target);
  const double target_energy = dot(target, target);
  if (target_energy == 0.0) throw DataError("spdr: all-zero reference");

  double err_energy = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - target[i];
    err_energy += e * e;
  }
  if (err_energy / target_energy < 1e-15) return kMetricCapDb;
  const double db = 10.0 * std::log10(target_energy / err_energy);
  return std::clamp(db, -kMetricCapDb, kMetricCapDb);
}

double sispnr(const MagnitudeSpectrogram& predicted, const MagnitudeSpectrogram& target) {
  return sispnr(predicted.data, target.data);
}

double spdr(const MagnitudeSpectrogram& predicted, const MagnitudeSpectrogram& target) {
  return spdr(predicted.data, target.data);
}

MetricSummary MetricReport::summarize() const {
  MetricSummary s;
  s.count = rows.size();
  if (rows.empty()) return s;
  for (const auto& r : rows) {
    s.sispnr_mean += r.sispnr_db;
    s.spdr_mean += r.spdr_db;
  }
  s.sispnr_mean /= static_cast<double>(rows.size());
  s.spdr_mean /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    s.sispnr_std += (r.sispnr_db - s.sispnr_mean) * (r.sispnr_db - s.sispnr_mean);
    s.spdr_std += (r.spdr_db - s.spdr_mean) * (r.spdr_db - s.spdr_mean);
  }
  s.sispnr_std = std::sqrt(s.sispnr_std / static_cast<double>(rows.size()));
  s.spdr_std = std::sqrt(s.spdr_std / static_cast<double>(rows.size()));
  return s;
}

ClipMetrics evaluate_clip(const std::string& clip_id, const AudioBuffer& predicted,
                          const AudioBuffer& target, const StftParams& params) {
  if (predicted.sample_rate != target.sample_rate) {
    throw DataError("evaluate_clip: sample-rate mismatch");
  }
  AudioBuffer p = downmix_mono(predicted);
  AudioBuffer t = downmix_mono(target);
  const size_t n = std::max(p.length(), t.length());
  p.samples().resize(n, 0.0);
  t.samples().resize(n, 0.0);

  const MagnitudeSpectrogram mp = magnitude(stft(p, params));
  const MagnitudeSpectrogram mt = magnitude(stft(t, params));
  ClipMetrics row;
  row.clip_id = clip_id;
  row.sispnr_db = sispnr(mp, mt);
  row.spdr_db = spdr(mp, mt);
  return row;
}

}  // namespace drysep
