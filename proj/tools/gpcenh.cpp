// gpcenh: simulate diffuse-noise scenes, enhance multichannel recordings
// and sweep the tracking time constant.
//
// Exit codes: 0 success, 1 usage error, 2 I/O or format error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gpc/gpc.hpp"

namespace {

using namespace gpc;

/// Flags are collected as raw strings and applied after the config file so
/// that flags take precedence.
struct FlagSet {
  std::map<std::string, std::string> values;
  std::string config_path;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
  void add_switch(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_flag_callback(flag, [this, key] { values[key] = "true"; }, help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [k, v] : values) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
  }
};

void add_scene_flags(CLI::App* app, FlagSet& f) {
  app->add_option("--config", f.config_path, "key = value configuration file");
  f.add(app, "--geometry", "geometry", "mic positions: linear:M:spacing_m or x,y,z;x,y,z;...");
  f.add(app, "--doa-deg", "doa_deg", "source direction relative to broadside, degrees");
  f.add(app, "--speed-of-sound", "speed_of_sound", "m/s");
  f.add(app, "--frame-len", "frame_len", "STFT frame length (hop is half)");
  f.add(app, "--seed", "seed", "random seed");
}

void add_enhance_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "--tau", "tau", "correlation averaging time constant, seconds");
  f.add(app, "--gain-floor-db", "gain_floor_db", "lower bound on the spectral gain, dB (off by default)");
  f.add(app, "--workers", "workers", "threads processing disjoint bin ranges");
  f.add_switch(app, "--hybrid-diffuse", "hybrid_diffuse",
               "instantaneous estimator takes the diffuse PSD from the smooth eigenvalues");
}

void add_simulation_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "--snr-db", "snr_db", "source-to-noise power ratio over all channels, dB ('inf' for clean)");
  f.add(app, "--duration", "duration", "length of the synthetic source, seconds");
  f.add(app, "--source", "source", "mono source WAV (default: synthetic speech-like signal)");
  f.add_switch(app, "--babble", "babble", "shape the noise with the source's long-term spectrum");
}

Signal load_source(const RunConfig& cfg) {
  if (cfg.source.empty()) return synthetic_speech(cfg.seed, cfg.duration_s, cfg.stft.sample_rate);
  WavData wav = read_wav(cfg.source);
  if (wav.sample_rate != cfg.stft.sample_rate)
    throw InvalidConfig("source sample rate " + std::to_string(wav.sample_rate) + " differs from configured " +
                        std::to_string(cfg.stft.sample_rate));
  return wav.channels.front();
}

Mixture simulate_scene(const RunConfig& cfg) {
  ScenarioSpec spec;
  spec.scene = cfg.scene();
  spec.source = load_source(cfg);
  spec.noise_seed = cfg.seed;
  spec.snr_db = cfg.snr_db;
  spec.babble_shaped = cfg.babble_shaped;
  return render_scenario(spec, cfg.stft);
}

std::string reference_path_for(const std::string& output) {
  const auto dot = output.rfind(".wav");
  return (dot == std::string::npos ? output : output.substr(0, dot)) + "_ref.wav";
}

MultiSignal load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw InvalidConfig("--input is required");
  WavData wav = read_wav(cfg.input);
  if (wav.sample_rate != cfg.stft.sample_rate)
    throw InvalidConfig("input sample rate " + std::to_string(wav.sample_rate) + " differs from configured " +
                        std::to_string(cfg.stft.sample_rate) + " (set sample_rate in the config)");
  return std::move(wav.channels);
}

Signal load_reference(const RunConfig& cfg, std::size_t length) {
  if (cfg.reference.empty()) throw InvalidConfig("metrics need a clean reference (--reference)");
  WavData wav = read_wav(cfg.reference);
  if (wav.frames() != length)
    throw InvalidConfig("reference has " + std::to_string(wav.frames()) + " samples, input has " +
                        std::to_string(length));
  return wav.channels.front();
}

EnhanceOptions enhance_options(const RunConfig& cfg, std::vector<FilterMode> modes, double tau) {
  EnhanceOptions o;
  o.tau = tau;
  o.modes = std::move(modes);
  o.diffuse = cfg.diffuse;
  o.gain_floor_db = cfg.gain_floor_db;
  o.workers = cfg.workers;
  return o;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.output.empty()) throw InvalidConfig("--output is required");
  const Mixture mix = simulate_scene(cfg);
  const std::string ref = cfg.reference.empty() ? reference_path_for(cfg.output) : cfg.reference;
  write_wav(cfg.output, mix.mixture, cfg.stft.sample_rate);
  write_wav(ref, MultiSignal{mix.reference}, cfg.stft.sample_rate);
  std::cout << "mixture: " << cfg.output << " (" << mix.mixture.size() << " channels, " << mix.reference.size()
            << " samples)\nreference: " << ref << "\n";
  return 0;
}

int cmd_enhance(const RunConfig& cfg) {
  if (cfg.output.empty()) throw InvalidConfig("--output is required");
  const MultiSignal y = load_input(cfg);
  std::optional<Signal> reference;
  if (cfg.metrics) reference = load_reference(cfg, y.front().size());
  const EnhanceResult r = enhance(y, cfg.scene(), cfg.stft, enhance_options(cfg, {cfg.mode}, cfg.tau));
  const Signal& out = r.outputs.at(cfg.mode);
  write_wav(cfg.output, MultiSignal{out}, cfg.stft.sample_rate);
  if (reference) {
    const MetricReport in = evaluate(*reference, y.front());
    const MetricReport en = evaluate(*reference, out);
    std::cout << std::fixed << std::setprecision(3) << "mode: " << to_string(cfg.mode) << "\ntau_s: " << cfg.tau
              << "\ninput_fw_seg_sir_db: " << in.fw_seg_sir << "\ninput_cepstral_distance_db: " << in.cepstral_distance
              << "\nfw_seg_sir_db: " << en.fw_seg_sir << "\ncepstral_distance_db: " << en.cepstral_distance
              << "\nframes_scored: " << std::count(en.sir_frames.used.begin(), en.sir_frames.used.end(), true)
              << "\n";
    if (r.diagnostics.estimates)
      std::cout << "instantaneous_clamp_rate: "
                << static_cast<double>(r.diagnostics.inst_clamps) / static_cast<double>(r.diagnostics.estimates)
                << "\n";
  }
  return 0;
}

struct SweepRow {
  FilterMode mode;
  double tau;
  MetricReport report;
};

int cmd_sweep(const RunConfig& cfg, const std::string& csv_path) {
  MultiSignal y;
  Signal reference;
  if (cfg.input.empty()) {
    Mixture mix = simulate_scene(cfg);
    y = std::move(mix.mixture);
    reference = std::move(mix.reference);
  } else {
    y = load_input(cfg);
    reference = load_reference(cfg, y.front().size());
  }

  std::vector<SweepRow> rows;
  for (double tau : cfg.sweep_taus) {
    const EnhanceResult r = enhance(y, cfg.scene(), cfg.stft, enhance_options(cfg, cfg.sweep_modes, tau));
    for (FilterMode m : cfg.sweep_modes) rows.push_back({m, tau, evaluate(reference, r.outputs.at(m))});
  }

  std::ostringstream csv;
  csv << "mode,tau_s,fw_seg_sir_db,cepstral_distance_db\n";
  for (const auto& row : rows)
    csv << to_string(row.mode) << ',' << row.tau << ',' << std::setprecision(10) << row.report.fw_seg_sir << ','
        << row.report.cepstral_distance << '\n';

  std::cout << std::left << std::setw(12) << "mode" << std::right << std::setw(8) << "tau[s]" << std::setw(14)
            << "fwSegSIR[dB]" << std::setw(10) << "CD[dB]" << "\n";
  for (const auto& row : rows)
    std::cout << std::left << std::setw(12) << to_string(row.mode) << std::right << std::fixed << std::setprecision(3)
              << std::setw(8) << row.tau << std::setw(14) << row.report.fw_seg_sir << std::setw(10)
              << row.report.cepstral_distance << "\n";
  std::cout.unsetf(std::ios::floatfield);

  if (csv_path == "-")
    std::cout << "\n" << csv.str();
  else if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!f) throw IoError("cannot open '" + csv_path + "' for writing");
    f << csv.str();
    if (!f) throw IoError("write error on '" + csv_path + "'");
  }
  return 0;
}

int exit_code(const gpc::Error& e) {
  switch (e.category()) {
    case ErrorCategory::invalid_argument: return 1;
    case ErrorCategory::io:
    case ErrorCategory::format: return 2;
    case ErrorCategory::numerical: return 3;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multichannel speech enhancement with eigenspace-based PSD estimation"};
  app.require_subcommand(1);

  FlagSet sim_flags, enh_flags, sweep_flags;

  CLI::App* sim = app.add_subcommand("simulate", "render a diffuse-noise scene: mixture WAV plus clean reference WAV");
  add_scene_flags(sim, sim_flags);
  add_simulation_flags(sim, sim_flags);
  sim_flags.add(sim, "--output", "output", "mixture WAV path");
  sim_flags.add(sim, "--reference", "reference", "reference WAV path (default: <output>_ref.wav)");

  CLI::App* enh = app.add_subcommand("enhance", "filter a multichannel WAV");
  add_scene_flags(enh, enh_flags);
  add_enhance_flags(enh, enh_flags);
  enh_flags.add(enh, "--mode", "mode", "passthrough | mvdr | mwf_smooth | mwf_inst");
  enh_flags.add(enh, "--input", "input", "multichannel input WAV");
  enh_flags.add(enh, "--output", "output", "enhanced mono WAV (32-bit float)");
  enh_flags.add(enh, "--reference", "reference", "clean reference WAV for --metrics");
  enh_flags.add_switch(enh, "--metrics", "metrics", "print fwSegSIR and cepstral distance");

  CLI::App* sweep = app.add_subcommand("sweep", "metric table over modes and time constants");
  add_scene_flags(sweep, sweep_flags);
  add_enhance_flags(sweep, sweep_flags);
  add_simulation_flags(sweep, sweep_flags);
  sweep_flags.add(sweep, "--taus", "taus", "comma-separated time constants, seconds");
  sweep_flags.add(sweep, "--modes", "modes", "comma-separated modes");
  sweep_flags.add(sweep, "--input", "input", "multichannel input WAV (default: simulate a scene)");
  sweep_flags.add(sweep, "--reference", "reference", "clean reference WAV for --input");
  std::string csv_path;
  sweep->add_option("--csv", csv_path, "write comma-separated table to this path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags.resolve());
    if (enh->parsed()) return cmd_enhance(enh_flags.resolve());
    if (sweep->parsed()) return cmd_sweep(sweep_flags.resolve(), csv_path);
  } catch (const gpc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
