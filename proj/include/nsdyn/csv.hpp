#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "nsdyn/errors.hpp"

namespace nsdyn::csv {

/// Line-oriented CSV reader for the simple comma-separated formats used by
/// the data interfaces (no quoting, no embedded commas).
class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw ParseError(path, 0, "cannot open file");
    }

    /// Reads the next row into `fields`. Returns false at end of file.
    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            fields.clear();
            std::size_t start = 0;
            while (true) {
                std::size_t pos = line.find(',', start);
                if (pos == std::string::npos) {
                    fields.push_back(line.substr(start));
                    break;
                }
                fields.push_back(line.substr(start, pos - start));
                start = pos + 1;
            }
            return true;
        }
        return false;
    }

    int line() const { return line_no_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(path_, line_no_, msg);
    }

    double to_double(const std::string& s, const char* what) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) fail(std::string("bad ") + what + " '" + s + "'");
            return v;
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            fail(std::string("bad ") + what + " '" + s + "'");
        }
    }

private:
    std::string path_;
    std::ifstream in_;
    int line_no_ = 0;
};

/// Formats a double with enough digits to round-trip, trimming the noise of
/// fixed-width padding so outputs stay byte-stable.
std::string format_double(double v);

}  // namespace nsdyn::csv
