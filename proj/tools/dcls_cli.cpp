// Copyright 2026 The DCLS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dcls: command-line front end.
//
// Exit codes: 0 success or check passed, 1 check failed or runtime error,
// 2 usage error (bad flags, unknown config keys, malformed values).

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcls/config.hpp"
#include "dcls/conv.hpp"
#include "dcls/experiment.hpp"
#include "dcls/gradcheck.hpp"
#include "dcls/kernel.hpp"
#include "dcls/random.hpp"
#include "dcls/receptive_field.hpp"
#include "dcls/tensor.hpp"
#include "dcls/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string dtype = "f64";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_overrides) {
  cmd->add_option("--config", opts.config_path, "INI file with settings")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--out", opts.out, "output path");
  cmd->add_option("--dtype", opts.dtype, "floating-point type")->check(CLI::IsMember({"f32", "f64"}));
  if (with_overrides) cmd->add_option("overrides", opts.overrides, "section.key=value overrides");
}

dcls::Config resolve(dcls::Config config, const CommonOptions& opts) {
  if (!opts.config_path.empty()) config.load(opts.config_path);
  for (const auto& o : opts.overrides) config.set_override(o);
  return config;
}

std::optional<fs::path> out_dir(const CommonOptions& opts) {
  if (opts.out.empty()) return std::nullopt;
  return fs::path(opts.out);
}

dcls::Shape parse_shape(const std::string& text, std::size_t dims, std::size_t fallback) {
  if (text.empty()) return dcls::Shape(dims, fallback);
  dcls::Shape out;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ',');) {
    try {
      out.push_back(static_cast<std::size_t>(std::stoul(part)));
    } catch (const std::exception&) {
      throw UsageError("cannot parse '" + text + "' as a comma-separated size list");
    }
  }
  if (out.size() == 1 && dims > 1) out.resize(dims, out.front());
  if (out.size() != dims) throw UsageError("'" + text + "' needs " + std::to_string(dims) + " entries");
  return out;
}

// ---------------------------------------------------------------------------

int run_gradcheck(const std::vector<std::string>& scopes, std::uint64_t seed, std::size_t instances, bool fault) {
  bool ok = true;
  for (const auto& scope : scopes) {
    const auto report = dcls::run_gradcheck(scope, seed, instances, fault);
    std::cout << scope << ": " << (report.pass() ? "PASS" : "FAIL") << ", " << report.instances
              << " instances, max rel err " << std::scientific << std::setprecision(3) << report.worst
              << (report.pass() ? " < " : " >= ") << report.threshold << std::defaultfloat << " (worst: "
              << report.worst_case << ")\n";
    ok &= report.pass();
  }
  return ok ? 0 : kExitFail;
}

struct ConvOptions {
  std::string input, weight, bias;
  std::string stride, dilation, padding;
  std::size_t groups = 1;
  std::size_t cases = 50;
};

template <typename T>
int run_conv_file(const ConvOptions& c, const CommonOptions& opts) {
  if (c.weight.empty() || opts.out.empty()) throw UsageError("conv with --input also needs --weight and --out");
  const auto input = dcls::load_tensor<T>(c.input);
  const auto weight = dcls::load_tensor<T>(c.weight);
  const dcls::Tensor<T> bias = c.bias.empty() ? dcls::Tensor<T>() : dcls::load_tensor<T>(c.bias);
  if (weight.ndim() < 3) throw UsageError("weight must be [C_out, C_in/groups, k...]");
  const std::size_t dims = weight.ndim() - 2;
  dcls::ConvSpec spec;
  spec.kernel_size.assign(weight.shape().begin() + 2, weight.shape().end());
  spec.stride = parse_shape(c.stride, dims, 1);
  spec.dilation = parse_shape(c.dilation, dims, 1);
  spec.padding = parse_shape(c.padding, dims, 0);
  spec.groups = c.groups;
  const auto out = dims == 3 ? dcls::conv_direct(input, weight, bias, spec) : dcls::conv_forward(input, weight, bias, spec);
  dcls::save_tensor(opts.out, out);
  std::cout << "wrote " << opts.out << " " << dcls::shape_to_string(out.shape()) << "\n";
  return 0;
}

// Random 1D/2D geometries; im2col path against the direct loops.
int run_conv_sweep(std::size_t cases, std::uint64_t seed) {
  dcls::Random rng(seed);
  double worst = 0;
  for (std::size_t i = 0; i < cases; ++i) {
    const auto dims = static_cast<std::size_t>(rng.integer(1, 2));
    const auto groups = static_cast<std::size_t>(rng.integer(1, 3));
    dcls::ConvSpec spec;
    spec.groups = groups;
    dcls::Shape in_shape{static_cast<std::size_t>(rng.integer(1, 3)), groups * static_cast<std::size_t>(rng.integer(1, 3))};
    dcls::Shape w_shape{groups * static_cast<std::size_t>(rng.integer(1, 3)), in_shape[1] / groups};
    for (std::size_t a = 0; a < dims; ++a) {
      spec.kernel_size.push_back(static_cast<std::size_t>(rng.integer(1, 4)));
      spec.stride.push_back(static_cast<std::size_t>(rng.integer(1, 3)));
      spec.dilation.push_back(static_cast<std::size_t>(rng.integer(1, 3)));
      spec.padding.push_back(static_cast<std::size_t>(rng.integer(0, 2)));
      const std::size_t span = spec.dilation[a] * (spec.kernel_size[a] - 1) + 1;
      in_shape.push_back(span + static_cast<std::size_t>(rng.integer(0, 8)));
      w_shape.push_back(spec.kernel_size[a]);
    }
    dcls::Tensor<double> x(in_shape), w(w_shape), b({w_shape[0]});
    for (auto& v : x.values()) v = rng.uniform(-1, 1);
    for (auto& v : w.values()) v = rng.uniform(-1, 1);
    for (auto& v : b.values()) v = rng.uniform(-1, 1);
    const auto fast = dcls::conv_forward(x, w, b, spec);
    const auto slow = dcls::conv_direct(x, w, b, spec);
    for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
  }
  const bool ok = worst < 1e-10;
  std::cout << "conv sweep: " << (ok ? "PASS" : "FAIL") << ", " << cases << " cases, max abs err " << std::scientific
            << std::setprecision(3) << worst << std::defaultfloat << "\n";
  return ok ? 0 : kExitFail;
}

int run_rf(const std::string& chain_name, const std::string& layers) {
  const dcls::LayerChain chain = layers.empty() ? dcls::named_chain(chain_name) : dcls::parse_chain(layers);
  const auto rf = dcls::rf_chain(chain);
  std::cout << "index,label,kernel,stride,dilation,rf\n";
  for (std::size_t i = 0; i < chain.size(); ++i)
    std::cout << i << ',' << chain[i].label << ',' << chain[i].kernel << ',' << chain[i].stride << ','
              << chain[i].dilation << ',' << rf[i] << '\n';
  return 0;
}

// Linear 2D conv chain with all-ones (or seeded positive random) weights.
template <typename T>
int run_erf(const std::string& layers, std::size_t size, bool random_weights, const CommonOptions& opts) {
  if (opts.out.empty()) throw UsageError("erf needs --out");
  const auto chain = dcls::parse_chain(layers);
  dcls::Random rng(opts.seed);
  std::vector<dcls::ConvSpec> specs;
  std::vector<dcls::Tensor<T>> weights;
  for (const auto& layer : chain) {
    const auto k = static_cast<std::size_t>(layer.kernel);
    specs.push_back(dcls::ConvSpec::uniform(2, k, static_cast<std::size_t>(layer.stride),
                                            static_cast<std::size_t>(layer.dilation)));
    dcls::Tensor<T> w({1, 1, k, k});
    for (auto& v : w.values()) v = random_weights ? static_cast<T>(rng.uniform(0.1, 1.0)) : T{1};
    weights.push_back(std::move(w));
  }
  if (size == 0) size = static_cast<std::size_t>(dcls::rf_chain(chain).back()) + 4;
  std::vector<dcls::Shape> shapes;
  dcls::GradientModel<T> model;
  model.forward = [&](const dcls::Tensor<T>& x) {
    shapes.clear();
    dcls::Tensor<T> h = x;
    for (std::size_t l = 0; l < specs.size(); ++l) {
      shapes.push_back(h.shape());
      h = dcls::conv_forward(h, weights[l], dcls::Tensor<T>(), specs[l]);
    }
    return h;
  };
  model.backward = [&](const dcls::Tensor<T>& seed) {
    dcls::Tensor<T> g = seed;
    for (std::size_t l = specs.size(); l-- > 0;) g = dcls::conv_backward_input(g, weights[l], shapes[l], specs[l]);
    return g;
  };
  dcls::Tensor<T> input({1, 1, size, size});
  for (auto& v : input.values()) v = static_cast<T>(rng.uniform(-1, 1));
  const auto heatmap = dcls::erf_estimate(model, input);
  dcls::save_tensor(opts.out, heatmap);
  std::cout << "wrote " << opts.out << " " << dcls::shape_to_string(heatmap.shape()) << "\n";
  return 0;
}

struct KernelOptions {
  std::string kind = "bilinear";
  std::string size = "7,7";
  std::size_t count = 4;
  std::size_t out_channels = 1, in_channels = 1;
  std::string weights, positions, sigmas;
};

template <typename T>
int run_construct_kernel(const KernelOptions& k, const CommonOptions& opts) {
  if (opts.out.empty()) throw UsageError("construct-kernel needs --out");
  const auto kind = dcls::parse_interp_kind(k.kind);
  dcls::DclsParams<T> p;
  p.dilated_kernel_size = parse_shape(k.size, std::count(k.size.begin(), k.size.end(), ',') + 1, 1);
  const std::size_t dims = p.dilated_kernel_size.size();
  dcls::Random rng(opts.seed);
  if (k.weights.empty()) {
    p.weights = dcls::Tensor<T>({k.out_channels, k.in_channels, k.count});
    for (auto& v : p.weights.values()) v = static_cast<T>(rng.uniform(-1, 1));
  } else {
    p.weights = dcls::load_tensor<T>(k.weights);
  }
  const dcls::Shape param_shape{dims, p.out_channels(), p.in_channels_per_group(), p.kernel_count()};
  if (k.positions.empty()) {
    p.positions = dcls::Tensor<T>(param_shape);
    const std::size_t per_axis = p.weights.size();
    for (std::size_t a = 0; a < dims; ++a) {
      const auto b = dcls::position_bounds(p.dilated_kernel_size[a]);
      for (std::size_t e = 0; e < per_axis; ++e) p.positions[a * per_axis + e] = static_cast<T>(rng.uniform(b.lo, b.hi));
    }
  } else {
    p.positions = dcls::load_tensor<T>(k.positions);
  }
  if (kind != dcls::InterpKind::Bilinear)
    p.sigmas = k.sigmas.empty() ? dcls::Tensor<T>(param_shape, static_cast<T>(kind == dcls::InterpKind::Gauss ? 0.23 : 0.0))
                                : dcls::load_tensor<T>(k.sigmas);
  const auto kernel = dcls::construct_kernel(p, kind);
  dcls::save_tensor(opts.out, kernel);
  std::cout << "wrote " << opts.out << " " << dcls::shape_to_string(kernel.shape()) << ", sum "
            << std::setprecision(12) << static_cast<double>(dcls::sum(kernel)) << "\n";
  return 0;
}

template <typename T>
int run_train_snn(const CommonOptions& opts) {
  const auto config = resolve(dcls::snn_default_config(), opts);
  const auto result = dcls::run_snn<T>(config, opts.seed, out_dir(opts));
  std::cout << "mode " << config.get_string("train.mode") << ", seed " << opts.seed << ": accuracy "
            << result.accuracy << ", rounded-delay accuracy " << result.discrete_accuracy << "\n";
  if (!opts.out.empty()) std::cout << "run written to " << opts.out << "\n";
  return 0;
}

template <typename T>
int run_train_toy2d(const CommonOptions& opts) {
  const auto config = resolve(dcls::toy2d_default_config(), opts);
  const auto result = dcls::run_toy2d<T>(config, opts.seed, out_dir(opts));
  std::cout << "dilated_size,accuracy\n";
  for (const auto& s : result.sizes) std::cout << s.dilated_size << ',' << s.accuracy << '\n';
  if (!opts.out.empty()) std::cout << "run written to " << opts.out << "\n";
  return 0;
}

template <template <typename> class Runner, typename... Args>
int by_dtype(const std::string& dtype, Args&&... args) {
  return dtype == "f32" ? Runner<float>::run(std::forward<Args>(args)...) : Runner<double>::run(std::forward<Args>(args)...);
}

template <typename T>
struct ConvFile { static int run(const ConvOptions& c, const CommonOptions& o) { return run_conv_file<T>(c, o); } };
template <typename T>
struct Erf {
  static int run(const std::string& l, std::size_t s, bool r, const CommonOptions& o) { return run_erf<T>(l, s, r, o); }
};
template <typename T>
struct Kernel { static int run(const KernelOptions& k, const CommonOptions& o) { return run_construct_kernel<T>(k, o); } };
template <typename T>
struct TrainSnn { static int run(const CommonOptions& o) { return run_train_snn<T>(o); } };
template <typename T>
struct TrainToy2d { static int run(const CommonOptions& o) { return run_train_toy2d<T>(o); } };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dilated convolution with learnable spacings: kernels, checks and experiments"};
  app.set_version_flag("--version", std::string(dcls::version()));
  app.require_subcommand(1);

  CommonOptions opts;

  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  std::vector<std::string> scopes;
  std::size_t instances = 200;
  bool inject_fault = false;
  add_common(gradcheck, opts, false);
  gradcheck->add_option("--scope", scopes, "scopes to check (default: all)")->check(CLI::IsMember(dcls::gradcheck_scopes()));
  gradcheck->add_option("--instances", instances, "random instances per scope")->check(CLI::PositiveNumber);
  gradcheck->add_flag("--inject-fault", inject_fault, "corrupt analytic gradients (negative control)");

  auto* conv = app.add_subcommand("conv", "convolve tensor files, or run the oracle sweep without --input");
  ConvOptions conv_opts;
  add_common(conv, opts, false);
  conv->add_option("--input", conv_opts.input, "input tensor [B, C, spatial...]")->check(CLI::ExistingFile);
  conv->add_option("--weight", conv_opts.weight, "weight tensor")->check(CLI::ExistingFile);
  conv->add_option("--bias", conv_opts.bias, "bias tensor [C_out]")->check(CLI::ExistingFile);
  conv->add_option("--stride", conv_opts.stride, "per-axis stride, e.g. 2 or 2,1");
  conv->add_option("--dilation", conv_opts.dilation, "per-axis dilation");
  conv->add_option("--padding", conv_opts.padding, "per-axis zero padding");
  conv->add_option("--groups", conv_opts.groups, "channel groups")->check(CLI::PositiveNumber);
  conv->add_option("--cases", conv_opts.cases, "random cases for the sweep")->check(CLI::PositiveNumber);

  auto* rf = app.add_subcommand("rf", "receptive field per layer as CSV");
  std::string chain_name = "convnext-t", chain_layers;
  rf->add_option("--chain", chain_name, "convnext-t, convnext-t-dcls17 or convnext-t-dcls23");
  rf->add_option("--layers", chain_layers, "custom chain, e.g. 4:4,7:1,2:2 or k:s:dilation");

  auto* erf = app.add_subcommand("erf", "effective receptive field heatmap of a linear conv chain");
  std::string erf_layers = "3:1,3:1";
  std::size_t erf_size = 0;
  bool erf_random = false;
  add_common(erf, opts, false);
  erf->add_option("--layers", erf_layers, "chain of k:s[:dilation] entries");
  erf->add_option("--size", erf_size, "input side (default: receptive field + 4)");
  erf->add_flag("--random-weights", erf_random, "positive random weights instead of ones");

  auto* kernel = app.add_subcommand("construct-kernel", "build a dense kernel from weights and positions");
  KernelOptions kernel_opts;
  add_common(kernel, opts, false);
  kernel->add_option("--kind", kernel_opts.kind, "bilinear, triangle or gauss");
  kernel->add_option("--size", kernel_opts.size, "dilated kernel size per axis, e.g. 7,7");
  kernel->add_option("--count", kernel_opts.count, "kernel elements per channel pair");
  kernel->add_option("--out-channels", kernel_opts.out_channels);
  kernel->add_option("--in-channels", kernel_opts.in_channels);
  kernel->add_option("--weights", kernel_opts.weights, "weight tensor [C_out, C_in, m]")->check(CLI::ExistingFile);
  kernel->add_option("--positions", kernel_opts.positions, "position tensor [d, C_out, C_in, m]")->check(CLI::ExistingFile);
  kernel->add_option("--sigmas", kernel_opts.sigmas, "sigma tensor [d, C_out, C_in, m]")->check(CLI::ExistingFile);

  auto* toy2d = app.add_subcommand("train-toy2d", "toy 2D classifier swept over dilated kernel sizes");
  add_common(toy2d, opts, true);

  auto* snn = app.add_subcommand("train-snn", "spiking delay learning, one ablation arm (train.mode)");
  add_common(snn, opts, true);

  auto* hist = app.add_subcommand("export-histograms", "position/delay histograms of a run directory");
  std::string run_dir;
  hist->add_option("run-dir", run_dir, "directory written by train-toy2d or train-snn")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gradcheck) return run_gradcheck(scopes.empty() ? dcls::gradcheck_scopes() : scopes, opts.seed, instances, inject_fault);
    if (*conv) {
      if (conv_opts.input.empty()) return run_conv_sweep(conv_opts.cases, opts.seed);
      return by_dtype<ConvFile>(opts.dtype, conv_opts, opts);
    }
    if (*rf) return run_rf(chain_name, chain_layers);
    if (*erf) return by_dtype<Erf>(opts.dtype, erf_layers, erf_size, erf_random, opts);
    if (*kernel) return by_dtype<Kernel>(opts.dtype, kernel_opts, opts);
    if (*toy2d) return by_dtype<TrainToy2d>(opts.dtype, opts);
    if (*snn) return by_dtype<TrainSnn>(opts.dtype, opts);
    if (*hist) {
      const auto written = dcls::export_histograms(run_dir);
      std::cout << "wrote " << written.string() << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dcls::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
