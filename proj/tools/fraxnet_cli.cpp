// fraxnet command line: split, train, evaluate, predict, gradcam.
//
// Exit codes: 0 success, 2 bad input (files, formats, config, flags),
// 3 numerical failure during training.

#include <algorithm>
#include <cstdio>
#include <initializer_list>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fraxnet/fraxnet.hpp"

namespace fs = std::filesystem;
using namespace fraxnet;

namespace {

struct ConfigFlags {
    std::string path;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", path, "Run config file (key = value lines)");
        cmd->add_option("--set", overrides, "Override one config key, e.g. --set train.epochs=5")
            ->allow_extra_args(false);
    }

    RunConfig load() const { return path.empty() ? parse_config("", overrides) : load_config(path, overrides); }
};

void print_counts(const DatasetManifest& m)
{
    for (auto split : {Split::train, Split::val, Split::test}) {
        const auto c = m.class_counts(split);
        std::printf("%-5s  non_fractured=%zu  fractured=%zu  total=%zu\n", std::string(split_name(split)).c_str(), c[0],
                    c[1], c[0] + c[1]);
    }
}

DatasetManifest keep_splits(DatasetManifest m, std::initializer_list<Split> splits)
{
    std::erase_if(m.records, [&](const ManifestRecord& r) {
        return std::find(splits.begin(), splits.end(), r.split) == splits.end();
    });
    return m;
}

Tensor<float> load_input(const Model<float>& model, const std::string& path, ImageBuffer* prepared = nullptr)
{
    const auto& c = model.config();
    auto img = prepare_image(read_image(path), c.input_height, c.input_width, c.input_channels);
    auto t = normalize<float>(img);
    if (prepared) *prepared = std::move(img);
    return t;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Predictions CSV: header "label,probability", one row per image.
ConfusionMatrix confusion_from_predictions(const fs::path& path, double threshold)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    ConfusionMatrix cm;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "label,probability") throw FormatError("predictions header must be 'label,probability'");
            continue;
        }
        if (line.empty()) continue;
        const auto where = path.string() + " line " + std::to_string(line_no) + ": ";
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError(where + "expected 'label,probability'");
        const auto label = line.substr(0, comma);
        if (label != "0" && label != "1") throw FormatError(where + "label must be 0 or 1");
        double p = 0.0;
        try {
            std::size_t used = 0;
            p = std::stod(line.substr(comma + 1), &used);
            if (used != line.size() - comma - 1) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw FormatError(where + "probability is not a number");
        }
        if (!(p >= 0.0 && p <= 1.0)) throw FormatError(where + "probability outside [0,1]");
        cm.add(label == "1", static_cast<int>(classify(p, threshold)));
    }
    if (line_no == 0) throw FormatError("predictions file '" + path.string() + "' is empty");
    if (cm.total() == 0) throw ValueError("predictions file '" + path.string() + "' has no rows");
    return cm;
}

int run_split(const std::string& data_dir, const std::string& out, const ConfigFlags& flags)
{
    auto cfg = flags.load();
    if (!data_dir.empty()) cfg.data.root = data_dir;
    if (cfg.data.root.empty()) throw ConfigError("no dataset directory (use --data or data.root)");
    auto manifest = scan_dataset(cfg.data.root);
    manifest = stratified_split(std::move(manifest), cfg.data.train_fraction, cfg.data.val_fraction, cfg.data.seed);
    write_manifest(out, manifest);
    print_counts(manifest);
    std::printf("manifest written to %s\n", out.c_str());
    return 0;
}

int run_train(const std::string& manifest_path, const std::string& out, std::string history,
              const ConfigFlags& flags)
{
    auto cfg = flags.load();
    if (history.empty()) history = fs::path(out).replace_extension(".history.csv").string();
    const auto manifest = read_manifest(manifest_path);
    const auto& mc = cfg.model;
    const Model<float> initial(mc);
    const auto data = ImageDataset::load(keep_splits(manifest, {Split::train, Split::val}), mc.input_height,
                                         mc.input_width, mc.input_channels);
    std::printf("train %zu images, val %zu images, %zu trainable parameters\n", data.count(Split::train),
                data.count(Split::val), initial.parameter_count());

    cfg.train.checkpoint_path = out;
    TrainHooks<float> hooks;
    hooks.on_epoch_end = [&](const HistoryRecord& h, const Model<float>&) {
        std::printf("epoch %3zu/%zu  loss=%.4f  acc=%.4f  val_loss=%.4f  val_acc=%.4f  lr=%g\n", h.epoch,
                    cfg.train.epochs, h.train_loss, h.train_accuracy, h.val_loss, h.val_accuracy, h.lr);
        std::fflush(stdout);
    };
    const auto result = train(initial, data, cfg.train, cfg.optim, cfg.augment, hooks);
    save_model(result.best_model, out);
    write_history_csv(history, result.history);

    const auto val = evaluate_split(result.best_model, data, Split::val, cfg.train.batch_size, cfg.train.threshold);
    std::printf("%s at epoch %zu; best weights from epoch %zu (val_loss=%.4f)\n",
                result.stopped_early ? "stopped early" : "finished", result.history.size(), result.best_epoch,
                val.loss);
    std::printf("validation metrics:\n%s", write_report(report(val.cm), ReportFormat::text).c_str());
    std::printf("model written to %s, history to %s\n", out.c_str(), history.c_str());
    return 0;
}

int run_evaluate(const std::string& model_path, const std::string& manifest_path, const std::string& split_text,
                 const std::string& report_path, const std::string& text_path, const std::string& predictions,
                 double threshold)
{
    ConfusionMatrix cm;
    if (!predictions.empty()) {
        cm = confusion_from_predictions(predictions, threshold);
    } else {
        if (model_path.empty() || manifest_path.empty())
            throw ConfigError("evaluate needs --model and --manifest (or --predictions)");
        const auto split = parse_split(split_text);
        const auto model = load_model(model_path);
        const auto& c = model.config();
        const auto manifest = keep_splits(read_manifest(manifest_path), {split});
        if (manifest.records.empty())
            throw ValueError("split '" + split_text + "' of '" + manifest_path + "' is empty");
        const auto data = ImageDataset::load(manifest, c.input_height, c.input_width, c.input_channels);
        cm = evaluate_split(model, data, split, 32, threshold).cm;
    }
    const auto r = report(cm);
    const auto text = write_report(r, ReportFormat::text);
    write_text(report_path, write_report(r, ReportFormat::json));
    if (!text_path.empty()) write_text(text_path, text);
    std::printf("%s", text.c_str());
    return 0;
}

int run_predict(const std::string& model_path, const std::string& image, double threshold)
{
    const auto model = load_model(model_path);
    const auto p = predict(model, load_input(model, image), threshold);
    std::printf("probability=%.6f label=%s\n", p.probability, std::string(label_name(p.label)).c_str());
    return 0;
}

int run_gradcam(const std::string& model_path, const std::string& image, const std::string& out,
                std::string heatmap_path, const std::string& layer, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("--alpha must lie in [0,1]");
    const auto model = load_model(model_path);
    ImageBuffer prepared;
    const auto input = load_input(model, image, &prepared);
    const auto hm = gradcam(model, input, layer);
    if (heatmap_path.empty()) {
        auto p = fs::path(out);
        heatmap_path = (p.parent_path() / (p.stem().string() + "_heatmap.pgm")).string();
    }
    write_image(heatmap_path, heatmap_image(hm));
    write_image(out, overlay(prepared, hm, alpha));
    const auto p = predict(model, input);
    std::printf("layer=%s probability=%.6f label=%s\n", hm.source_layer.c_str(), p.probability,
                std::string(label_name(p.label)).c_str());
    std::printf("heatmap written to %s, overlay to %s\n", heatmap_path.c_str(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fracture classification on radiographs: split, train, evaluate, predict, gradcam"};
    app.require_subcommand(1);

    std::string data_dir, out, manifest, history, model, split = "test", report_path, text_path, predictions, image,
                                                          heatmap, layer;
    double threshold = 0.5, alpha = 0.4;
    ConfigFlags split_flags, train_flags;

    auto* split_cmd = app.add_subcommand("split", "Scan a dataset directory and write a stratified split manifest");
    split_cmd->add_option("--data", data_dir, "Dataset root with fractured/ and non_fractured/ directories");
    split_cmd->add_option("--out", out, "Manifest CSV to write")->required();
    split_flags.attach(split_cmd);

    auto* train_cmd = app.add_subcommand("train", "Train a model on the manifest's train split");
    train_cmd->add_option("--manifest", manifest, "Manifest CSV")->required();
    train_cmd->add_option("--out", out, "Model file to write (best validation weights)")->required();
    train_cmd->add_option("--history", history, "History CSV (default: <out>.history.csv)");
    train_flags.attach(train_cmd);

    auto* eval_cmd = app.add_subcommand("evaluate", "Write a classification report for one split");
    eval_cmd->add_option("--model", model, "Model file");
    eval_cmd->add_option("--manifest", manifest, "Manifest CSV");
    eval_cmd->add_option("--split", split, "train, val or test")->capture_default_str();
    eval_cmd->add_option("--report", report_path, "JSON report to write")->required();
    eval_cmd->add_option("--text", text_path, "Also write the text report here");
    eval_cmd->add_option("--predictions", predictions,
                         "CSV 'label,probability' used instead of running a model");
    eval_cmd->add_option("--threshold", threshold, "Decision threshold (inclusive)")->capture_default_str();

    auto* predict_cmd = app.add_subcommand("predict", "Classify one image");
    predict_cmd->add_option("--model", model, "Model file")->required();
    predict_cmd->add_option("image", image, "PGM or PPM image")->required();
    predict_cmd->add_option("--threshold", threshold, "Decision threshold (inclusive)")->capture_default_str();

    auto* cam_cmd = app.add_subcommand("gradcam", "Write a Grad-CAM heatmap and overlay for one image");
    cam_cmd->add_option("--model", model, "Model file")->required();
    cam_cmd->add_option("image", image, "PGM or PPM image")->required();
    cam_cmd->add_option("--out", out, "Overlay PPM to write")->required();
    cam_cmd->add_option("--heatmap", heatmap, "Heatmap PGM (default: <out stem>_heatmap.pgm)");
    cam_cmd->add_option("--layer", layer, "Convolution layer (default: the last one)");
    cam_cmd->add_option("--alpha", alpha, "Heatmap opacity in [0,1]")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*split_cmd) return run_split(data_dir, out, split_flags);
        if (*train_cmd) return run_train(manifest, out, history, train_flags);
        if (*eval_cmd)
            return run_evaluate(model, manifest, split, report_path, text_path, predictions, threshold);
        if (*predict_cmd) return run_predict(model, image, threshold);
        if (*cam_cmd) return run_gradcam(model, image, out, heatmap, layer, alpha);
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
