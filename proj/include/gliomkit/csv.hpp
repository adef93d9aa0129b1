#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"

namespace gliomkit::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream iss(line);
    while (std::getline(iss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(concat("cannot open CSV: ", path));
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size())
                throw format_error(concat(path, ": row has ", fields.size(),
                                          " fields, header has ", t.header.size()));
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw format_error(concat(path, ": empty CSV"));
    return t;
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw io_error(concat("cannot write CSV: ", path));
        path_ = path;
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) throw io_error(concat("failed writing CSV: ", path_));
    }

private:
    std::ofstream out_;
    std::string path_;
};

// Fixed-format float printing so emitted artifacts are byte-stable.
inline std::string num(double v, int precision = 9) {
    std::ostringstream oss;
    oss.precision(precision);
    oss << v;
    return oss.str();
}

} // namespace gliomkit::csv
