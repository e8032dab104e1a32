#include "safeqml/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "safeqml/error.hpp"
#include "safeqml/random.hpp"
#include "safeqml/serialization.hpp"

namespace safeqml {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view cell, double& out) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return false;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw Error(ErrorCode::IoFailure, "cannot format number");
    return std::string(buf.data(), ptr);
}

Dataset parse_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw Error(ErrorCode::EmptyFile, "no header row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    if (header.size() < 2 || trim(header.back()) != "label") {
        throw Error(ErrorCode::MalformedHeader, "expected f0,...,f{d-1},label");
    }
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (trim(header[j]) != "f" + std::to_string(j)) {
            throw Error(ErrorCode::MalformedHeader, "column " + std::to_string(j) + " should be named f" +
                                                        std::to_string(j));
        }
    }

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            if (j >= cells.size() || !parse_number(cells[j], v)) {
                throw CsvError(ErrorCode::NonNumericCell, "bad feature value", row, j);
            }
            values.push_back(v);
        }
        double label = 0.0;
        if (d >= cells.size() || !parse_number(cells[d], label) || label != std::floor(label) ||
            std::abs(label) > 1e9) {
            throw CsvError(ErrorCode::NonNumericCell, "bad label", row, d);
        }
        if (label < 0) throw CsvError(ErrorCode::LabelOutOfRange, "negative label", row, d);
        if (cells.size() > d + 1) {
            throw CsvError(ErrorCode::NonNumericCell, "unexpected extra cell", row, d + 1);
        }
        labels.push_back(static_cast<int>(label));
        ++row;
    }
    if (labels.empty()) throw Error(ErrorCode::EmptyFile, "no data rows");

    Dataset ds;
    ds.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()),
                                           static_cast<Eigen::Index>(d));
    ds.labels = std::move(labels);
    ds.n_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    return ds;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    return parse_dataset_csv(in);
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
    const std::size_t d = dataset.n_features();
    for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
    out << "label\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out << format_double(dataset.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                << ',';
        }
        out << dataset.labels[i] << '\n';
    }
}

void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    write_dataset_csv(dataset, out);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void SyntheticSpec::validate() const {
    if (n_classes < 2) throw Error(ErrorCode::InvalidSpec, "need at least two classes");
    if (n_features < 1) throw Error(ErrorCode::InvalidSpec, "need at least one feature");
    if (n_samples < static_cast<std::size_t>(n_classes) * 5) {
        throw Error(ErrorCode::InvalidSpec, "need at least 5 samples per class");
    }
    if (!(separation > 0.0) || !std::isfinite(separation)) {
        throw Error(ErrorCode::InvalidSpec, "separation must be positive");
    }
    if (!(within_std > 0.0) || !std::isfinite(within_std)) {
        throw Error(ErrorCode::InvalidSpec, "within-class std must be positive");
    }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(spec.n_features);
    const auto c = static_cast<Eigen::Index>(spec.n_classes);

    Matrix centers(c, d);
    for (Eigen::Index i = 0; i < centers.size(); ++i) {
        centers.data()[i] = spec.separation * spec.within_std * normal(rng);
    }
    const double target = spec.separation * std::sqrt(static_cast<double>(d)) * spec.within_std;
    double closest = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < c; ++a) {
        for (Eigen::Index b = a + 1; b < c; ++b) closest = std::min(closest, (centers.row(a) - centers.row(b)).norm());
    }
    if (closest < target) centers *= target / closest;

    std::vector<int> labels(spec.n_samples);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(c));
    std::shuffle(labels.begin(), labels.end(), rng);

    Dataset ds;
    ds.n_classes = spec.n_classes;
    ds.labels = labels;
    ds.features.resize(static_cast<Eigen::Index>(spec.n_samples), d);
    for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        for (Eigen::Index j = 0; j < d; ++j) {
            ds.features(r, j) = centers(y, j) + spec.within_std * normal(rng);
        }
    }
    return ds;
}

void write_curve_csv(const RgCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << "level,score\n";
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        out << format_double(curve.levels[i]) << ',';
        if (i < curve.scores.size() && curve.scores[i]) out << format_double(*curve.scores[i]);
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    written.push_back(out_dir / "report.json");
    write_json_file(to_json(report), written.back());
    for (const KindSummary& s : report.summary) {
        std::string kind(to_string(s.kind));
        std::transform(kind.begin(), kind.end(), kind.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        for (const auto& [variant, curve] : s.mean_curves) {
            written.push_back(out_dir / ("curve_" + kind + "_" + variant + ".csv"));
            write_curve_csv(curve, written.back());
        }
    }
    return written;
}

}  // namespace safeqml
