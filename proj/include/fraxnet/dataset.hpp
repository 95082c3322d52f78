#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fraxnet/error.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/rng.hpp"

namespace fraxnet {

enum class Split { unassigned, train, val, test };

inline std::string_view split_name(Split s)
{
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: break;
    }
    return "unassigned";
}

inline Split parse_split(std::string_view s)
{
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw FormatError("unknown split '" + std::string(s) + "' (expected train, val or test)");
}

struct ManifestRecord {
    std::string path;
    Label label = Label::non_fractured;
    Split split = Split::unassigned;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Per-class counts: [non_fractured, fractured].
using ClassCounts = std::array<std::size_t, 2>;

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    ClassCounts class_counts() const
    {
        ClassCounts c{0, 0};
        for (const auto& r : records) ++c[static_cast<int>(r.label)];
        return c;
    }

    ClassCounts class_counts(Split split) const
    {
        ClassCounts c{0, 0};
        for (const auto& r : records)
            if (r.split == split) ++c[static_cast<int>(r.label)];
        return c;
    }

    std::size_t count(Split split) const
    {
        const auto c = class_counts(split);
        return c[0] + c[1];
    }

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

namespace detail {

inline std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline bool is_netpbm(const std::filesystem::path& p)
{
    const auto ext = lower(p.extension().string());
    return ext == ".pgm" || ext == ".ppm";
}

// Directory name -> label, accepting the common spellings.
inline std::optional<Label> class_dir_label(std::string_view name)
{
    const auto n = lower(name);
    if (n == "fractured") return Label::fractured;
    if (n == "non-fractured" || n == "non_fractured" || n == "nonfractured" || n == "not_fractured")
        return Label::non_fractured;
    return std::nullopt;
}

inline long long round_count(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

}  // namespace detail

/// Scans `root` for a fractured/ and a non-fractured/ directory (directly or
/// under root/images/) holding .pgm/.ppm files. Records are sorted by path;
/// splits are left unassigned.
inline DatasetManifest scan_dataset(const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("dataset root '" + root.string() + "' is not a readable directory");

    auto base = root;
    auto has_class_dirs = [](const fs::path& dir) {
        std::error_code e;
        for (const auto& entry : fs::directory_iterator(dir, e))
            if (entry.is_directory() && detail::class_dir_label(entry.path().filename().string())) return true;
        return false;
    };
    if (!has_class_dirs(base) && fs::is_directory(root / "images", ec)) base = root / "images";

    DatasetManifest m;
    std::map<std::string, std::string> seen_names;  // file name -> first path
    std::array<bool, 2> found_dir{false, false};
    std::vector<fs::directory_entry> class_dirs;
    try {
        for (const auto& entry : fs::directory_iterator(base)) class_dirs.push_back(entry);
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot read '" + base.string() + "': " + e.what());
    }
    for (const auto& dir : class_dirs) {
        if (!dir.is_directory()) continue;
        const auto label = detail::class_dir_label(dir.path().filename().string());
        if (!label) continue;
        found_dir[static_cast<int>(*label)] = true;
        try {
            for (const auto& f : fs::directory_iterator(dir.path())) {
                if (!f.is_regular_file() || !detail::is_netpbm(f.path())) continue;
                const auto path = f.path().lexically_normal().generic_string();
                const auto fname = f.path().filename().string();
                auto [it, inserted] = seen_names.emplace(fname, path);
                if (!inserted)
                    throw ValueError("duplicate image name: '" + path + "' collides with '" + it->second + "'");
                m.records.push_back({path, *label, Split::unassigned});
            }
        } catch (const fs::filesystem_error& e) {
            throw IoError("cannot read '" + dir.path().string() + "': " + e.what());
        }
    }
    std::sort(m.records.begin(), m.records.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    const auto counts = m.class_counts();
    if (!found_dir[0] || counts[0] == 0)
        throw ValueError("dataset '" + base.string() + "' has no non-fractured images");
    if (!found_dir[1] || counts[1] == 0) throw ValueError("dataset '" + base.string() + "' has no fractured images");
    return m;
}

/// Per-class split sizes for `n` images.
struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// test = round(n*(1-train_fraction)); val = round((n-test)*val_fraction);
/// rounding is half-up. A val_fraction of 0 produces no validation split.
inline SplitSizes split_sizes(std::size_t n, double train_fraction, double val_fraction_of_train)
{
    SplitSizes s;
    s.test = static_cast<std::size_t>(detail::round_count(static_cast<double>(n) * (1.0 - train_fraction)));
    s.test = std::min(s.test, n);
    const auto rest = n - s.test;
    s.val = static_cast<std::size_t>(detail::round_count(static_cast<double>(rest) * val_fraction_of_train));
    s.val = std::min(s.val, rest);
    s.train = rest - s.val;
    return s;
}

/// Stratified assignment: each class is shuffled independently (seeded by
/// `seed` and the class) and cut into test, val and train portions. Input
/// record order is preserved in the result.
inline DatasetManifest stratified_split(DatasetManifest manifest, double train_fraction, double val_fraction_of_train,
                                        std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValueError("train fraction must lie in (0,1)");
    if (!(val_fraction_of_train >= 0.0 && val_fraction_of_train < 1.0))
        throw ValueError("validation fraction must lie in [0,1)");

    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < manifest.records.size(); ++i)
            if (static_cast<int>(manifest.records[i].label) == cls) idx.push_back(i);
        const auto sizes = split_sizes(idx.size(), train_fraction, val_fraction_of_train);
        const auto name = std::string(label_name(static_cast<Label>(cls)));
        if (sizes.train == 0 || sizes.test == 0 || (val_fraction_of_train > 0.0 && sizes.val == 0))
            throw ValueError("class " + name + " (" + std::to_string(idx.size()) +
                             " images) is too small for the requested split fractions");
        Rng rng(mix_seed({seed, static_cast<std::uint64_t>(cls)}));
        shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto& r = manifest.records[idx[k]];
            r.split = k < sizes.test ? Split::test : (k < sizes.test + sizes.val ? Split::val : Split::train);
        }
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// Manifest CSV: header "path,label,split"
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::vector<std::string> csv_fields(std::string_view line, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw FormatError("manifest line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace detail

inline std::string manifest_to_csv(const DatasetManifest& m)
{
    std::string out = "path,label,split\n";
    for (const auto& r : m.records) {
        if (r.split == Split::unassigned) throw ValueError("record '" + r.path + "' has no split assigned");
        out += detail::csv_quote(r.path) + "," + std::to_string(static_cast<int>(r.label)) + "," +
               std::string(split_name(r.split)) + "\n";
    }
    return out;
}

inline DatasetManifest manifest_from_csv(std::string_view text)
{
    DatasetManifest m;
    std::set<std::string> paths;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!header_seen) {
            if (line != "path,label,split") throw FormatError("manifest header must be 'path,label,split'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto f = detail::csv_fields(line, line_no);
        if (f.size() != 3) throw FormatError("manifest line " + std::to_string(line_no) + ": expected 3 fields");
        if (f[1] != "0" && f[1] != "1")
            throw FormatError("manifest line " + std::to_string(line_no) + ": label must be 0 or 1");
        if (!paths.insert(f[0]).second)
            throw FormatError("manifest line " + std::to_string(line_no) + ": duplicate path '" + f[0] + "'");
        m.records.push_back({f[0], f[1] == "1" ? Label::fractured : Label::non_fractured, parse_split(f[2])});
    }
    if (!header_seen) throw FormatError("manifest is empty");
    return m;
}

/// Writes the manifest with paths relative to the manifest's directory.
inline void write_manifest(const std::filesystem::path& file, DatasetManifest m)
{
    namespace fs = std::filesystem;
    const auto dir = fs::absolute(file).parent_path();
    for (auto& r : m.records) {
        const auto rel = fs::absolute(r.path).lexically_relative(dir);
        if (!rel.empty()) r.path = rel.generic_string();
    }
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest '" + file.string() + "'");
    out << manifest_to_csv(m);
    if (!out) throw IoError("write failed for '" + file.string() + "'");
}

/// Reads a manifest; relative paths resolve against the manifest's directory.
inline DatasetManifest read_manifest(const std::filesystem::path& file)
{
    namespace fs = std::filesystem;
    std::ifstream in(file);
    if (!in) throw IoError("cannot open manifest '" + file.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto m = manifest_from_csv(ss.str());
    const auto dir = fs::absolute(file).parent_path();
    for (auto& r : m.records)
        if (fs::path(r.path).is_relative()) r.path = (dir / r.path).lexically_normal().generic_string();
    return m;
}

}  // namespace fraxnet
