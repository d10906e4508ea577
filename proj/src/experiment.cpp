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

#include "dcls/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>

#include "dcls/layers.hpp"
#include "dcls/optim.hpp"
#include "dcls/snn.hpp"
#include "dcls/version.hpp"

namespace dcls {

namespace fs = std::filesystem;

std::string metrics_csv(const std::vector<EpochMetrics>& rows) {
  const bool tagged = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.tag.empty(); });
  std::ostringstream out;
  out << std::setprecision(10);
  if (tagged) out << "variant,";
  out << "epoch,loss,accuracy,position_speed,sigma\n";
  for (const auto& r : rows) {
    if (tagged) out << r.tag << ',';
    out << r.epoch << ',' << r.loss << ',' << r.accuracy << ',' << r.position_speed << ',' << r.sigma << '\n';
  }
  return out.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

/// Epoch-wise position snapshots plus the manifest export_histograms reads.
class SnapshotWriter {
 public:
  explicit SnapshotWriter(const std::optional<fs::path>& run_dir) {
    if (!run_dir) return;
    dir_ = *run_dir / "snapshots";
    fs::create_directories(*dir_);
    manifest_ << "epoch,layer,file,lo,hi\n" << std::setprecision(17);
  }

  template <typename T>
  void record(std::size_t epoch, const std::string& layer, const Tensor<T>& values, double lo, double hi) {
    if (!dir_) return;
    const std::string file = "epoch" + std::to_string(epoch) + "_" + layer + ".dcls";
    save_tensor(*dir_ / file, values.template cast<double>());
    manifest_ << epoch << ',' << layer << ',' << file << ',' << lo << ',' << hi << '\n';
  }

  void finish() {
    if (dir_) write_text(*dir_ / "manifest.csv", manifest_.str());
  }

 private:
  std::optional<fs::path> dir_;
  std::ostringstream manifest_;
};

void write_run_header(const fs::path& dir, const Config& config, std::uint64_t seed) {
  fs::create_directories(dir);
  write_text(dir / "config.ini", "# seed = " + std::to_string(seed) + "\n" + config.to_ini());
  write_text(dir / "version.txt", std::string(version()) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------
// Histograms

std::vector<std::size_t> histogram(const std::vector<double>& values, double lo, double hi, double width) {
  if (!(hi > lo) || !(width > 0.0)) throw std::invalid_argument("histogram needs hi > lo and width > 0");
  const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
  std::vector<std::size_t> counts(std::max<std::size_t>(bins, 1), 0);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    const auto k = static_cast<std::size_t>(std::floor((v - lo) / width));
    ++counts[std::min(k, counts.size() - 1)];
  }
  return counts;
}

fs::path export_histograms(const fs::path& run_dir, double width) {
  if (!fs::is_directory(run_dir)) throw std::runtime_error("run directory " + run_dir.string() + " does not exist");
  const fs::path manifest = run_dir / "snapshots" / "manifest.csv";
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error(run_dir.string() + " holds no snapshots/manifest.csv");
  std::string line;
  std::getline(in, line);  // header
  std::ostringstream out;
  out << "epoch,layer,bin_lo,bin_hi,count\n" << std::setprecision(10);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string epoch, layer, file, lo_text, hi_text;
    if (!std::getline(fields, epoch, ',') || !std::getline(fields, layer, ',') || !std::getline(fields, file, ',') ||
        !std::getline(fields, lo_text, ',') || !std::getline(fields, hi_text, ','))
      throw std::runtime_error("malformed manifest line: " + line);
    const double lo = std::stod(lo_text), hi = std::stod(hi_text);
    const auto values = load_tensor<double>(run_dir / "snapshots" / file);
    const auto counts = histogram(values.vector(), lo, hi, width);
    for (std::size_t k = 0; k < counts.size(); ++k)
      out << epoch << ',' << layer << ',' << lo + k * width << ',' << std::min(hi, lo + (k + 1) * width) << ','
          << counts[k] << '\n';
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(manifest.string() + " lists no snapshots");
  const fs::path target = run_dir / "histograms.csv";
  write_text(target, out.str());
  return target;
}

// ---------------------------------------------------------------------------
// Spiking delay learning

Config snn_default_config() {
  return Config({
      {"task.kind", "delayed-pattern"},
      {"task.classes", "10"},
      {"task.channels", "100"},
      {"task.steps", "50"},
      {"task.max_offset", "20"},
      {"task.jitter", "0"},
      {"task.noise_spikes", "2"},
      {"task.train_samples", "1000"},
      {"task.test_samples", "500"},
      {"model.hidden", "64"},
      {"model.kernel_size", "25"},
      {"model.tau", "2"},
      {"model.threshold", "1"},
      {"model.surrogate_alpha", "2"},
      {"model.readout_tau", "2"},
      {"model.sparsity", "0.98"},
      {"model.batchnorm", "true"},
      {"model.dropout", "0"},
      {"train.mode", "learn-delays"},
      {"train.epochs", "20"},
      {"train.batch_size", "50"},
      {"train.lr_weights", "0.01"},
      {"train.lr_delays", "0.1"},
      {"train.weight_decay", "0"},
      {"train.sigma_floor", "0.5"},
      {"train.sigma_anneal_epochs", "10"},
  });
}

namespace {

SnnConfig snn_model_config(const Config& c, std::size_t inputs, std::size_t classes) {
  SnnConfig m;
  m.inputs = inputs;
  m.classes = classes;
  m.hidden = c.get_sizes("model.hidden");
  m.kernel_size = c.get_size("model.kernel_size");
  m.lif = LifConfig{c.get_double("model.tau"), c.get_double("model.threshold"), 0.0,
                    c.get_double("model.surrogate_alpha")};
  m.readout_tau = c.get_double("model.readout_tau");
  m.sparsity = c.get_double("model.sparsity");
  m.batchnorm = c.get_bool("model.batchnorm");
  m.dropout = c.get_double("model.dropout");
  return m;
}

/// Delays of the connected synapses of one layer.
template <typename T>
std::vector<double> active_delays(const DelayConnection<T>& layer) {
  std::vector<double> out;
  const auto& mask = layer.mask();
  const auto& d = layer.delays()->value;
  for (std::size_t s = 0; s < d.size(); ++s)
    if (mask.empty() || mask[s]) out.push_back(d[s]);
  return out;
}

template <typename T>
std::vector<double> active_delays(const SnnModel<T>& model) {
  std::vector<double> out;
  for (const auto& layer : model.delay_layers()) {
    const auto d = active_delays(*layer);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

double mean_abs_change(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

template <typename T>
double snn_accuracy(SnnModel<T>& model, const SpikeDataset& data, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end, std::size_t batch) {
  std::size_t correct = 0;
  for (std::size_t b = begin; b < end; b += batch) {
    const std::size_t e = std::min(end, b + batch);
    const auto scores = readout_scores(model.forward(data.batch<T>(order, b, e), Mode::Eval));
    const auto pred = argmax_rows(scores);
    const auto labels = data.batch_labels(order, b, e);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(end - begin);
}

}  // namespace

template <typename T>
SnnRunResult run_snn(const Config& config, std::uint64_t seed, const std::optional<fs::path>& out_dir) {
  const Ablation mode = parse_ablation(config.get_string("train.mode"));
  SpikeTaskSpec task;
  task.kind = parse_spike_task(config.get_string("task.kind"));
  task.classes = config.get_size("task.classes");
  task.channels = config.get_size("task.channels");
  task.steps = config.get_size("task.steps");
  task.max_offset = config.get_size("task.max_offset");
  task.jitter = config.get_size("task.jitter");
  task.noise_spikes = config.get_size("task.noise_spikes");
  const std::size_t n_train = config.get_size("task.train_samples"), n_test = config.get_size("task.test_samples");
  task.samples = n_train + n_test;
  if (n_train == 0 || n_test == 0) throw ConfigError("train and test sample counts must be > 0");
  const SpikeDataset data = make_synthetic_dataset(task, seed);

  const std::size_t epochs = config.get_size("train.epochs"), batch = config.get_size("train.batch_size");
  if (epochs == 0 || batch == 0) throw ConfigError("epochs and batch size must be > 0");
  const double lr_w = config.get_double("train.lr_weights"), lr_d = config.get_double("train.lr_delays");
  const double sigma_floor = config.get_double("train.sigma_floor");

  Random init(seed * 0x9E3779B97F4A7C15ULL + 1);
  SnnModel<T> model(snn_model_config(config, data.spikes.dim(1), data.classes), init, seed + 7);
  const std::size_t td = model.config().kernel_size;
  if (mode == Ablation::NoDelays) {
    model.zero_delays();
    model.set_discrete(true);
  }

  ParamGroup<T> weights{"weights", {}, lr_w, 1.0, config.get_double("train.weight_decay")};
  ParamGroup<T> norm{"norm", {}, lr_w, 1.0, 0.0};
  ParamGroup<T> delays{"delays", {}, lr_d, 1.0, 0.0};
  for (const auto& p : model.parameters()) {
    if (p->role == ParamRole::Position) delays.params.push_back(p);
    else if (p->role == ParamRole::Norm) norm.params.push_back(p);
    else weights.params.push_back(p);
  }
  if (mode == Ablation::FixedRandomDelays || mode == Ablation::NoDelays) delays.lr_scale = 0.0;
  if (mode == Ablation::FixedWeights) weights.lr_scale = 0.0;
  Adam<T> opt({weights, norm, delays});

  const std::size_t steps_per_epoch = (n_train + batch - 1) / batch;
  const OneCycle weight_lr{lr_w, epochs * steps_per_epoch};
  const SigmaSchedule sigma_schedule{static_cast<double>(td) / 2.0, sigma_floor,
                                     std::max<std::size_t>(config.get_size("train.sigma_anneal_epochs"), 1)};

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> test_order(order.begin() + n_train, order.end());
  std::vector<std::size_t> train_order(order.begin(), order.begin() + n_train);
  std::mt19937_64 shuffle(seed + 11);

  SnapshotWriter snapshots(out_dir);
  auto snapshot = [&](std::size_t epoch) {
    for (std::size_t l = 0; l < model.delay_layers().size(); ++l) {
      auto d = active_delays(*model.delay_layers()[l]);
      const std::size_t n = d.size();
      snapshots.record(epoch, "delay" + std::to_string(l), Tensor<double>({n}, std::move(d)), 0.0,
                       static_cast<double>(td - 1));
    }
  };
  snapshot(0);

  SnnRunResult result;
  std::size_t step = 0;
  double sigma = sigma_floor;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    sigma = mode == Ablation::ConstantSigma ? sigma_floor : sigma_schedule(static_cast<double>(epoch));
    model.set_sigma(sigma);
    const auto before = active_delays(model);
    std::shuffle(train_order.begin(), train_order.end(), shuffle);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n_train; b += batch, ++step) {
      const std::size_t e = std::min(n_train, b + batch);
      opt.zero_grad();
      Tensor<T> grad;
      const auto potentials = model.forward(data.batch<T>(train_order, b, e), Mode::Train);
      loss_sum += static_cast<double>(readout_loss(potentials, data.batch_labels(train_order, b, e), &grad)) * (e - b);
      model.backward(grad);
      opt.group("weights").lr = opt.group("norm").lr = weight_lr(step);
      opt.group("delays").lr = std::max(cosine_annealing(lr_d, 0.0, step, epochs * steps_per_epoch), 1e-12);
      opt.step();
    }
    EpochMetrics row;
    row.epoch = epoch + 1;
    row.loss = loss_sum / static_cast<double>(n_train);
    row.accuracy = snn_accuracy(model, data, test_order, 0, n_test, batch);
    row.position_speed = mean_abs_change(before, active_delays(model));
    row.sigma = sigma;
    result.epochs.push_back(row);
    snapshot(epoch + 1);
  }
  result.accuracy = result.epochs.back().accuracy;
  model.set_discrete(true);
  result.discrete_accuracy = snn_accuracy(model, data, test_order, 0, n_test, batch);

  if (out_dir) {
    write_run_header(*out_dir, config, seed);
    write_text(*out_dir / "metrics.csv", metrics_csv(result.epochs));
    std::ostringstream summary;
    summary << std::setprecision(10) << "mode,accuracy,discrete_accuracy\n"
            << to_string(mode) << ',' << result.accuracy << ',' << result.discrete_accuracy << '\n';
    write_text(*out_dir / "summary.csv", summary.str());
    snapshots.finish();
    export_histograms(*out_dir);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Toy 2D classifier

Config toy2d_default_config() {
  return Config({
      {"task.image_size", "32"},
      {"task.cell_distances", "1,3"},
      {"task.noise", "0.1"},
      {"task.train_samples", "800"},
      {"task.test_samples", "400"},
      {"model.channels", "8"},
      {"model.kernel_count", "4"},
      {"model.dilated_sizes", "1,3,7"},
      {"model.interp", "gauss"},
      {"model.batchnorm", "true"},
      {"train.epochs", "10"},
      {"train.batch_size", "32"},
      {"train.lr", "0.01"},
      {"train.weight_decay", "0"},
      {"train.position_lr_scale", "5"},
  });
}

DotsDataset make_dots_dataset(std::size_t image_size, const std::vector<std::size_t>& cell_distances,
                              std::size_t samples, double noise, std::uint64_t seed) {
  if (image_size % 2 || image_size < 4) throw std::invalid_argument("dots: image size must be even and >= 4");
  const std::size_t cells = image_size / 2;
  if (cell_distances.empty()) throw std::invalid_argument("dots: need at least one distance");
  for (auto d : cell_distances)
    if (d == 0 || d >= cells) throw std::invalid_argument("dots: distances must be in [1, image_size/2)");
  DotsDataset data;
  data.classes = 2 * cell_distances.size();
  data.images = Tensor<double>({samples, 1, image_size, image_size});
  data.labels.resize(samples);
  Random rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto label = static_cast<int>(s % data.classes);
    data.labels[s] = label;
    const std::size_t dist = cell_distances[static_cast<std::size_t>(label) / 2];
    const bool vertical = label % 2;
    const auto span = static_cast<std::int64_t>(cells - 1);
    // first dot anywhere the partner fits along the axis
    std::int64_t r0 = rng.integer(0, vertical ? span - static_cast<std::int64_t>(dist) : span);
    std::int64_t c0 = rng.integer(0, vertical ? span : span - static_cast<std::int64_t>(dist));
    const std::int64_t r1 = r0 + (vertical ? static_cast<std::int64_t>(dist) : 0);
    const std::int64_t c1 = c0 + (vertical ? 0 : static_cast<std::int64_t>(dist));
    double* img = data.images.data() + s * image_size * image_size;
    for (auto& v : std::span(img, image_size * image_size)) v = noise > 0 ? rng.normal(0.0, noise) : 0.0;
    for (auto [r, c] : {std::pair{r0, c0}, std::pair{r1, c1}})
      for (std::size_t dy = 0; dy < 2; ++dy)
        for (std::size_t dx = 0; dx < 2; ++dx) img[(2 * r + dy) * image_size + 2 * c + dx] += 1.0;
  }
  return data;
}

namespace {

template <typename T>
Tensor<T> image_batch(const DotsDataset& data, const std::vector<std::size_t>& order, std::size_t begin,
                      std::size_t end) {
  const std::size_t row = data.images.size() / data.labels.size();
  Shape shape = data.images.shape();
  shape[0] = end - begin;
  Tensor<T> out(shape);
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t k = 0; k < row; ++k) out[(r - begin) * row + k] = static_cast<T>(data.images[order[r] * row + k]);
  return out;
}

template <typename T>
double mean_effective_sigma(const DclsConv<T>& layer) {
  if (!layer.sigmas()) return 0.0;
  double acc = 0.0;
  for (T s : layer.sigmas()->value.values()) acc += effective_scale(layer.config().interp, static_cast<double>(s));
  return acc / static_cast<double>(layer.sigmas()->value.size());
}

}  // namespace

template <typename T>
Toy2dRunResult run_toy2d(const Config& config, std::uint64_t seed, const std::optional<fs::path>& out_dir) {
  const std::size_t image = config.get_size("task.image_size");
  const std::size_t n_train = config.get_size("task.train_samples"), n_test = config.get_size("task.test_samples");
  if (n_train == 0 || n_test == 0) throw ConfigError("train and test sample counts must be > 0");
  const auto data =
      make_dots_dataset(image, config.get_sizes("task.cell_distances"), n_train + n_test, config.get_double("task.noise"), seed);
  const std::size_t channels = config.get_size("model.channels");
  const std::size_t epochs = config.get_size("train.epochs"), batch = config.get_size("train.batch_size");
  if (epochs == 0 || batch == 0 || channels == 0) throw ConfigError("epochs, batch size and channels must be > 0");
  const double lr = config.get_double("train.lr");
  const InterpKind interp = parse_interp_kind(config.get_string("model.interp"));

  std::vector<std::size_t> order(data.labels.size());
  std::iota(order.begin(), order.end(), 0);
  const std::vector<std::size_t> test_order(order.begin() + n_train, order.end());

  Toy2dRunResult result;
  SnapshotWriter snapshots(out_dir);
  for (std::size_t size : config.get_sizes("model.dilated_sizes")) {
    if (size == 0) throw ConfigError("dilated sizes must be >= 1");
    const std::string tag = "s" + std::to_string(size);
    Random init(seed * 0x9E3779B97F4A7C15ULL + 3);
    auto stem = std::make_shared<Conv<T>>(1, channels, ConvSpec::uniform(2, 2, 2), true, init);
    DclsConvConfig dc;
    dc.in_channels = channels;
    dc.out_channels = channels;
    dc.kernel_count = config.get_size("model.kernel_count");
    dc.dilated_kernel_size = {size, size};
    dc.interp = interp;
    auto dcls_layer = std::make_shared<DclsConv<T>>(dc, init);
    // Batch norm before the second ReLU lets its threshold sit between one-dot and two-dot responses.
    std::vector<LayerPtr<T>> layers{stem, std::make_shared<ReLU<T>>(), dcls_layer};
    if (config.get_bool("model.batchnorm")) layers.push_back(std::make_shared<BatchNorm<T>>(channels));
    layers.push_back(std::make_shared<ReLU<T>>());
    layers.push_back(std::make_shared<GlobalAvgPool<T>>());
    layers.push_back(std::make_shared<Linear<T>>(channels, data.classes, init));
    Sequential<T> model(std::move(layers));
    model.set_input_gradient_required(false);

    Adam<T> opt(default_param_groups(model.parameters(), lr, config.get_double("train.weight_decay"),
                                     config.get_double("train.position_lr_scale")));
    const std::size_t steps_per_epoch = (n_train + batch - 1) / batch;
    const OneCycle schedule{lr, epochs * steps_per_epoch};
    const auto bounds = position_bounds(size);
    auto snapshot = [&](std::size_t epoch) {
      snapshots.record(epoch, tag, dcls_layer->positions()->value, bounds.lo, std::max(bounds.hi, bounds.lo + 0.25));
    };
    snapshot(0);

    std::vector<std::size_t> train_order(order.begin(), order.begin() + n_train);
    std::mt19937_64 shuffle(seed + 13);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      const Tensor<T> before = dcls_layer->positions()->value;
      std::shuffle(train_order.begin(), train_order.end(), shuffle);
      double loss_sum = 0.0;
      for (std::size_t b = 0; b < n_train; b += batch, ++step) {
        const std::size_t e = std::min(n_train, b + batch);
        std::vector<int> labels;
        for (std::size_t i = b; i < e; ++i) labels.push_back(data.labels[train_order[i]]);
        opt.zero_grad();
        Tensor<T> grad;
        const auto logits = model.forward(image_batch<T>(data, train_order, b, e), Mode::Train);
        loss_sum += static_cast<double>(softmax_cross_entropy(logits, labels, &grad)) * (e - b);
        model.backward(grad);
        for (auto& g : opt.groups()) g.lr = schedule(step);
        opt.step();
      }
      std::size_t correct = 0;
      for (std::size_t b = 0; b < n_test; b += batch) {
        const std::size_t e = std::min(n_test, b + batch);
        const auto pred = argmax_rows(model.forward(image_batch<T>(data, test_order, b, e), Mode::Eval));
        for (std::size_t i = b; i < e; ++i) correct += pred[i - b] == data.labels[test_order[i]];
      }
      EpochMetrics row;
      row.tag = tag;
      row.epoch = epoch + 1;
      row.loss = loss_sum / static_cast<double>(n_train);
      row.accuracy = static_cast<double>(correct) / static_cast<double>(n_test);
      row.position_speed = position_speed(before, dcls_layer->positions()->value);
      row.sigma = mean_effective_sigma(*dcls_layer);
      result.epochs.push_back(row);
      snapshot(epoch + 1);
    }
    result.sizes.push_back({size, result.epochs.back().accuracy});
  }

  if (out_dir) {
    write_run_header(*out_dir, config, seed);
    write_text(*out_dir / "metrics.csv", metrics_csv(result.epochs));
    std::ostringstream summary;
    summary << std::setprecision(10) << "dilated_size,accuracy\n";
    for (const auto& s : result.sizes) summary << s.dilated_size << ',' << s.accuracy << '\n';
    write_text(*out_dir / "summary.csv", summary.str());
    snapshots.finish();
    export_histograms(*out_dir);
  }
  return result;
}

template SnnRunResult run_snn<float>(const Config&, std::uint64_t, const std::optional<fs::path>&);
template SnnRunResult run_snn<double>(const Config&, std::uint64_t, const std::optional<fs::path>&);
template Toy2dRunResult run_toy2d<float>(const Config&, std::uint64_t, const std::optional<fs::path>&);
template Toy2dRunResult run_toy2d<double>(const Config&, std::uint64_t, const std::optional<fs::path>&);

}  // namespace dcls
