#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "graphfilt/core.hpp"

namespace graphfilt::io {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file, then renames over the destination.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dst(path);
    fs::path tmp = dst;
    tmp += ".tmp" + std::to_string(static_cast<unsigned long long>(std::hash<std::string>{}(path) % 1000003));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::io, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, dst, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::io, "cannot rename onto '" + path + "'");
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line);
}

inline double parse_double(const std::string& tok, const std::string& ctx) {
    double v = 0.0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || tok.empty())
        throw Error(ErrorKind::parse, ctx + ": expected a number, got '" + tok + "'");
    return v;
}

inline long long parse_int(const std::string& tok, const std::string& ctx) {
    long long v = 0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || tok.empty())
        throw Error(ErrorKind::parse, ctx + ": expected an integer, got '" + tok + "'");
    return v;
}

/// Table of CSV rows with the header checked against `expected`.
struct CsvRows {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;
};

inline CsvRows parse_csv(const std::string& text, const std::vector<std::string>& expected,
                         const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    CsvRows out;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!header_seen) {
            if (fields != expected) {
                std::string want;
                for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
                throw Error(ErrorKind::parse, where(source, lineno) + ": expected header '" + want + "'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != expected.size())
            throw Error(ErrorKind::parse, where(source, lineno) + ": expected " + std::to_string(expected.size()) +
                                              " fields, got " + std::to_string(fields.size()));
        out.rows.push_back(std::move(fields));
        out.lines.push_back(lineno);
    }
    if (!header_seen) throw Error(ErrorKind::parse, source + ": missing header");
    return out;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace graphfilt::io
