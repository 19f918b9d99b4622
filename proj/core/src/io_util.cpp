#include "vibench/io_util.hpp"

#include <fstream>
#include <sstream>

namespace vibench::ioutil {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("ParseError: cannot open file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw DataError("ParseError: read failure on " + path);
    return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("ParseError: cannot open file for writing " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw DataError("ParseError: write failure on " + path);
}

} // namespace vibench::ioutil
