#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace kgads::csv {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// RFC-4180 field quoting (quotes only when needed).
std::string quote(std::string_view field);

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void header(const std::vector<std::string>& names);
    Writer& field(double v);
    Writer& field(long long v);
    Writer& field(std::string_view s);
    void end_row();

private:
    std::ostream& out_;
    bool first_ = true;
};

/// Reads a numeric CSV. A non-numeric first row is treated as a header.
std::vector<std::vector<double>> read_numeric(const std::filesystem::path& path);

}  // namespace kgads::csv
