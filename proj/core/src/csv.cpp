#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "snswf/errors.hpp"
#include "snswf/signals.hpp"

namespace snswf {

namespace {

std::string_view trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
    while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view text) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

} // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return {buf, res.ptr};
}

MultichannelRecord load_csv(const std::filesystem::path& path, std::optional<double> sample_rate_hz) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

    std::optional<double> declared_rate;
    std::vector<std::string> names;
    bool has_time = false;
    std::vector<double> times;
    std::vector<std::vector<double>> columns;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            auto body = trim(text.substr(1));
            constexpr std::string_view key = "sample_rate_hz=";
            if (body.starts_with(key)) {
                auto v = parse_double(trim(body.substr(key.size())));
                if (!v || !(*v > 0.0)) throw ParseError("bad sample_rate_hz comment at line " +
                                                            std::to_string(line_no), line_no);
                declared_rate = *v;
            }
            continue;
        }
        const auto fields = split(text);
        if (names.empty()) {
            for (auto f : fields) names.emplace_back(f);
            has_time = names.front() == "time";
            columns.resize(has_time ? names.size() - 1 : names.size());
            if (columns.empty()) throw ParseError("header names no channels", line_no);
            continue;
        }
        if (fields.size() != names.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(names.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        for (std::size_t col = 0; col < fields.size(); ++col) {
            const auto v = parse_double(fields[col]);
            if (!v || !std::isfinite(*v))
                throw ParseError("line " + std::to_string(line_no) + ", column " +
                                     std::to_string(col + 1) + " ('" + names[col] +
                                     "'): not a finite number: '" + std::string(fields[col]) + "'",
                                 line_no, col + 1);
            if (has_time && col == 0) times.push_back(*v);
            else columns[has_time ? col - 1 : col].push_back(*v);
        }
    }
    if (names.empty()) throw ParseError("missing header row", line_no);
    if (columns.front().size() < 2) throw FormatError("a record needs at least 2 samples");

    double rate = 0.0;
    if (has_time) {
        std::vector<double> dts(times.size() - 1);
        for (std::size_t i = 1; i < times.size(); ++i) dts[i - 1] = times[i] - times[i - 1];
        std::vector<double> sorted = dts;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                         sorted.end());
        const double median = sorted[sorted.size() / 2];
        if (!(median > 0.0)) throw FormatError("time column is not increasing");
        for (std::size_t i = 0; i < dts.size(); ++i) {
            if (!close_rel(dts[i], median, 1e-6))
                throw FormatError("non-uniform time grid at data row " + std::to_string(i + 2));
        }
        rate = 1.0 / median;
        for (auto other : {declared_rate, sample_rate_hz}) {
            if (other && !close_rel(rate, *other, 1e-6))
                throw FormatError("sample rate " + format_double(*other) +
                                  " disagrees with time column (" + format_double(rate) + ")");
        }
        // a declared rate is exact where the median spacing carries rounding
        if (declared_rate) rate = *declared_rate;
        else if (sample_rate_hz) rate = *sample_rate_hz;
    } else {
        if (sample_rate_hz) rate = *sample_rate_hz;
        else if (declared_rate) rate = *declared_rate;
        else throw FormatError("no time column and no sample rate supplied");
        if (sample_rate_hz && declared_rate && !close_rel(*sample_rate_hz, *declared_rate, 1e-6))
            throw FormatError("supplied sample rate disagrees with file comment");
    }

    std::vector<ChannelMeta> channels;
    for (std::size_t i = has_time ? 1 : 0; i < names.size(); ++i) channels.push_back({names[i]});
    return make_record(rate, std::move(channels), columns);
}

void save_csv(const MultichannelRecord& record, const std::filesystem::path& path) {
    record.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "# sample_rate_hz=" << format_double(record.sample_rate_hz) << '\n';
    out << "time";
    for (const auto& ch : record.channels) out << ',' << ch.name;
    out << '\n';
    for (std::size_t i = 0; i < record.n_samples(); ++i) {
        out << format_double(static_cast<double>(i) / record.sample_rate_hz);
        for (Eigen::Index c = 0; c < record.data.rows(); ++c)
            out << ',' << format_double(record.data(c, static_cast<Eigen::Index>(i)));
        out << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

} // namespace snswf
