#pragma once

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "sdmaf/types.hpp"

namespace sdmaf {

/// Line reader over plain or gzip-compressed text (zlib handles both
/// transparently).  Lines of any length; trailing \n / \r\n stripped.
class TextReader {
public:
    explicit TextReader(const std::string& path) : path_(path) {
        gz_ = gzopen(path.c_str(), "rb");
        if (!gz_) throw InputError("cannot open " + path);
        gzbuffer(gz_, 1 << 20);
    }
    ~TextReader() {
        if (gz_) gzclose(gz_);
    }
    TextReader(const TextReader&) = delete;
    TextReader& operator=(const TextReader&) = delete;

    bool getline(std::string& out) {
        out.clear();
        for (;;) {
            if (gzgets(gz_, buf_.data(), static_cast<int>(buf_.size())) == nullptr) {
                int err = 0;
                gzerror(gz_, &err);
                if (err != 0 && err != Z_STREAM_END)
                    throw InputError("read error in " + path_);
                return !out.empty();
            }
            out.append(buf_.data());
            if (!out.empty() && out.back() == '\n') {
                out.pop_back();
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return true;
            }
        }
    }

private:
    std::string path_;
    gzFile gz_ = nullptr;
    std::vector<char> buf_ = std::vector<char>(1 << 16);
};

/// Text writer; writes gzip when the path ends in ".gz".
class TextWriter {
public:
    explicit TextWriter(const std::string& path) : path_(path) {
        if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
            gz_ = gzopen(path.c_str(), "wb");
            if (!gz_) throw InputError("cannot open " + path + " for writing");
        } else {
            fp_ = std::fopen(path.c_str(), "wb");
            if (!fp_) throw InputError("cannot open " + path + " for writing");
        }
    }
    ~TextWriter() {
        try {
            close();
        } catch (...) {
        }
    }
    TextWriter(const TextWriter&) = delete;
    TextWriter& operator=(const TextWriter&) = delete;

    void write(std::string_view s) {
        if (gz_) {
            if (gzwrite(gz_, s.data(), static_cast<unsigned>(s.size())) !=
                static_cast<int>(s.size()))
                throw Error("short write to " + path_);
        } else if (fp_) {
            if (std::fwrite(s.data(), 1, s.size(), fp_) != s.size())
                throw Error("short write to " + path_);
        }
    }

    void close() {
        if (gz_) {
            const int rc = gzclose(gz_);
            gz_ = nullptr;
            if (rc != Z_OK) throw Error("error closing " + path_);
        }
        if (fp_) {
            const int rc = std::fclose(fp_);
            fp_ = nullptr;
            if (rc != 0) throw Error("error closing " + path_);
        }
    }

private:
    std::string path_;
    gzFile gz_ = nullptr;
    std::FILE* fp_ = nullptr;
};

inline void split_tabs(const std::string& line, std::vector<std::string_view>& out) {
    out.clear();
    const char* begin = line.data();
    const char* end = begin + line.size();
    const char* field = begin;
    for (const char* p = begin; p != end; ++p) {
        if (*p == '\t') {
            out.emplace_back(field, static_cast<std::size_t>(p - field));
            field = p + 1;
        }
    }
    out.emplace_back(field, static_cast<std::size_t>(end - field));
}

inline std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::int64_t parse_int(std::string_view s, const char* what) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw InputError(std::string("cannot parse ") + what + " from '" + std::string(s) + "'");
    return v;
}

inline double parse_double(std::string_view s, const char* what) {
    // from_chars<double> is still spotty on some toolchains; strtod it is.
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty())
        throw InputError(std::string("cannot parse ") + what + " from '" + buf + "'");
    return v;
}

/// printf %.{sig}g.
inline std::string format_double(double v, int sig = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig, v);
    return buf;
}

/// Scientific notation with a 6-significant-digit mantissa, rendered
/// from -log10(p) so values far below double underflow still print
/// exactly ("1.23456e-1086").
inline std::string format_pvalue(double neg_log10_p) {
    if (!std::isfinite(neg_log10_p)) return "NA";
    double e = std::floor(-neg_log10_p);
    double m = std::pow(10.0, -neg_log10_p - e);
    char mbuf[32];
    std::snprintf(mbuf, sizeof mbuf, "%.5f", m);
    if (mbuf[0] == '1' && mbuf[1] == '0') {
        // mantissa rounded up to 10.00000: carry into the exponent
        e += 1.0;
        std::snprintf(mbuf, sizeof mbuf, "%.5f", 1.0);
    }
    char out[48];
    std::snprintf(out, sizeof out, "%se%+03d", mbuf, static_cast<int>(e));
    return out;
}

/// Recover -log10(p) from scientific-notation text without the double
/// underflow a strtod round trip would suffer.
inline double neg_log10_from_text(std::string_view s) {
    const std::size_t epos = s.find_first_of("eE");
    if (epos == std::string_view::npos) {
        const double p = parse_double(s, "p-value");
        if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
        return -std::log10(p);
    }
    const double mant = parse_double(s.substr(0, epos), "p-value mantissa");
    const double expo = parse_double(s.substr(epos + 1), "p-value exponent");
    if (!(mant > 0.0)) return std::numeric_limits<double>::infinity();
    return -(std::log10(mant) + expo);
}

}  // namespace sdmaf
