#pragma once

// Labeled collections of series and their CSV representation.
//
// values CSV:  series_id,t,ch_0,...,ch_{d-1}   (rows grouped by series_id, t increasing)
// labels CSV:  series_id,label[,split]          (split in {train,validation,test})

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pathdev/devlayer.hpp"

namespace pathdev {

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Split { unassigned, train, validation, test };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
        case Split::unassigned: return "";
    }
    return "";
}

inline std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    if (s.empty()) return Split::unassigned;
    return std::nullopt;
}

struct Sample {
    std::string id;
    TimeSeries series;
    int label = 0;
    Split split = Split::unassigned;
};

struct Dataset {
    std::vector<Sample> samples;

    std::size_t channels() const { return samples.empty() ? 0 : samples.front().series.channels(); }

    std::vector<const Sample*> in_split(Split s) const {
        std::vector<const Sample*> out;
        for (const auto& smp : samples)
            if (smp.split == s) out.push_back(&smp);
        return out;
    }

    std::size_t count(Split s) const { return in_split(s).size(); }

    bool has_splits() const {
        for (const auto& s : samples)
            if (s.split == Split::unassigned) return false;
        return !samples.empty();
    }

    void validate() const {
        if (samples.empty()) throw dimension_error("dataset is empty");
        const std::size_t d = channels();
        for (const auto& s : samples) {
            if (s.series.channels() != d)
                throw dimension_error("series '" + s.id + "' has " + std::to_string(s.series.channels()) +
                                      " channels, expected " + std::to_string(d));
            if (s.label != 0 && s.label != 1)
                throw std::invalid_argument("series '" + s.id + "' has non-binary label");
        }
    }
};

namespace csv_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& field, std::size_t line_no, const std::string& column) {
    const std::string f = trim(field);
    if (f.empty()) throw parse_error("line " + std::to_string(line_no) + ": empty value in column '" + column + "'");
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw parse_error("line " + std::to_string(line_no) + ": invalid number '" + f + "' in column '" + column + "'");
    return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace csv_detail

/// Parses a values CSV and a labels CSV into a dataset (order of first appearance in the values file).
inline Dataset read_dataset(std::istream& values, std::istream& labels) {
    using namespace csv_detail;
    std::string line;
    if (!std::getline(values, line)) throw parse_error("line 1: values file is empty");
    auto header = split_fields(line);
    if (header.size() < 3 || trim(header[0]) != "series_id" || trim(header[1]) != "t")
        throw parse_error("line 1: values header must be series_id,t,ch_0,...");
    const std::size_t d = header.size() - 2;
    for (std::size_t c = 0; c < d; ++c)
        if (trim(header[c + 2]) != "ch_" + std::to_string(c))
            throw parse_error("line 1: expected column 'ch_" + std::to_string(c) + "', got '" + trim(header[c + 2]) + "'");

    Dataset ds;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<double>> buffers;
    std::vector<double> last_t;
    std::size_t line_no = 1;
    std::string current;
    while (std::getline(values, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != header.size())
            throw parse_error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                              " fields, got " + std::to_string(f.size()));
        const std::string id = trim(f[0]);
        if (id.empty()) throw parse_error("line " + std::to_string(line_no) + ": empty series_id");
        const double t = parse_number(f[1], line_no, "t");
        auto it = index.find(id);
        if (it == index.end()) {
            it = index.emplace(id, ds.samples.size()).first;
            ds.samples.push_back(Sample{id, {}, 0, Split::unassigned});
            buffers.emplace_back();
            last_t.push_back(t);
        } else {
            if (id != current)
                throw parse_error("line " + std::to_string(line_no) + ": rows of series '" + id + "' are not contiguous");
            if (!(t > last_t[it->second]))
                throw parse_error("line " + std::to_string(line_no) + ": t must increase within series '" + id + "'");
            last_t[it->second] = t;
        }
        current = id;
        for (std::size_t c = 0; c < d; ++c)
            buffers[it->second].push_back(parse_number(f[c + 2], line_no, "ch_" + std::to_string(c)));
    }
    if (ds.samples.empty()) throw parse_error("values file has no rows");
    for (std::size_t i = 0; i < ds.samples.size(); ++i) ds.samples[i].series = TimeSeries(d, std::move(buffers[i]));

    line_no = 1;
    if (!std::getline(labels, line)) throw parse_error("line 1: labels file is empty");
    header = split_fields(line);
    const bool with_split = header.size() == 3;
    if (header.size() < 2 || header.size() > 3 || trim(header[0]) != "series_id" || trim(header[1]) != "label" ||
        (with_split && trim(header[2]) != "split"))
        throw parse_error("line 1: labels header must be series_id,label[,split]");
    std::vector<bool> seen(ds.samples.size(), false);
    while (std::getline(labels, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != header.size())
            throw parse_error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
        const auto it = index.find(trim(f[0]));
        if (it == index.end())
            throw parse_error("line " + std::to_string(line_no) + ": unknown series_id '" + trim(f[0]) + "'");
        const std::string lab = trim(f[1]);
        if (lab != "0" && lab != "1")
            throw parse_error("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + lab + "'");
        Sample& s = ds.samples[it->second];
        s.label = lab == "1" ? 1 : 0;
        if (with_split) {
            const auto sp = parse_split(trim(f[2]));
            if (!sp) throw parse_error("line " + std::to_string(line_no) + ": unknown split '" + trim(f[2]) + "'");
            s.split = *sp;
        }
        seen[it->second] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw parse_error("labels file has no entry for series '" + ds.samples[i].id + "'");
    return ds;
}

inline Dataset read_dataset(const std::string& values_path, const std::string& labels_path) {
    std::ifstream v(values_path), l(labels_path);
    if (!v) throw parse_error("cannot open " + values_path);
    if (!l) throw parse_error("cannot open " + labels_path);
    return read_dataset(v, l);
}

inline void write_dataset(const Dataset& ds, std::ostream& values, std::ostream& labels) {
    using csv_detail::format_double;
    const std::size_t d = ds.channels();
    values << "series_id,t";
    for (std::size_t c = 0; c < d; ++c) values << ",ch_" << c;
    values << '\n';
    for (const auto& s : ds.samples) {
        for (std::size_t n = 0; n < s.series.points(); ++n) {
            values << s.id << ',' << n;
            for (std::size_t c = 0; c < d; ++c) values << ',' << format_double(s.series(n, c));
            values << '\n';
        }
    }
    const bool with_split = ds.has_splits();
    labels << (with_split ? "series_id,label,split\n" : "series_id,label\n");
    for (const auto& s : ds.samples) {
        labels << s.id << ',' << s.label;
        if (with_split) labels << ',' << to_string(s.split);
        labels << '\n';
    }
}

inline void write_dataset(const Dataset& ds, const std::string& values_path, const std::string& labels_path) {
    std::ofstream v(values_path), l(labels_path);
    if (!v || !l) throw std::runtime_error("cannot write dataset to " + values_path + " / " + labels_path);
    write_dataset(ds, v, l);
}

}  // namespace pathdev
