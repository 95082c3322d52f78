// Writes a small synthetic radiograph set (PGM) with a manifest.
//
//   make_toy_dataset --out DIR [--train 8] [--val 4] [--test 0] [--size 32] [--seed 11]
//
// Counts are per class. Images go to DIR/fractured and DIR/non_fractured;
// DIR/manifest.csv assigns them to splits.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "fraxnet/fraxnet.hpp"

int main(int argc, char** argv)
{
    namespace fs = std::filesystem;
    CLI::App app{"Write a synthetic fracture toy dataset"};
    std::string out;
    std::size_t train = 8, val = 4, test = 0, size = 32;
    std::uint64_t seed = 11;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--train", train, "Training images per class")->capture_default_str();
    app.add_option("--val", val, "Validation images per class")->capture_default_str();
    app.add_option("--test", test, "Test images per class")->capture_default_str();
    app.add_option("--size", size, "Image side length in pixels")->capture_default_str();
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const fs::path root(out);
        fraxnet::DatasetManifest manifest;
        const std::pair<fraxnet::Split, std::size_t> parts[] = {
            {fraxnet::Split::train, train}, {fraxnet::Split::val, val}, {fraxnet::Split::test, test}};
        for (int cls = 0; cls < 2; ++cls) {
            const auto label = static_cast<fraxnet::Label>(cls);
            const std::string cls_name(fraxnet::label_name(label));
            fs::create_directories(root / cls_name);
            for (const auto& [split, count] : parts) {
                const std::string split_name(fraxnet::split_name(split));
                for (std::size_t i = 0; i < count; ++i) {
                    char name[64];
                    std::snprintf(name, sizeof name, "%s_%s_%03zu.pgm", cls_name.c_str(), split_name.c_str(), i);
                    const auto path = root / cls_name / name;
                    const auto img_seed = fraxnet::mix_seed({seed, static_cast<std::uint64_t>(split),
                                                             static_cast<std::uint64_t>(cls), i});
                    fraxnet::write_image(path, fraxnet::synthetic_radiograph(size, label, img_seed));
                    manifest.records.push_back({path.generic_string(), label, split});
                }
            }
        }
        fraxnet::write_manifest(root / "manifest.csv", manifest);
        std::printf("wrote %zu images and %s\n", manifest.records.size(), (root / "manifest.csv").string().c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
