#include "landscape/json_writer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "landscape/ingest.hpp"

namespace landscape {

namespace {

void write_string(std::ostream& out, const std::string& s) {
    // nlohmann handles escaping and UTF-8 validation
    out << nlohmann::json(s).dump();
}

void write_value(std::ostream& out, const nlohmann::ordered_json& v, int depth) {
    const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
    const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
    switch (v.type()) {
    case nlohmann::ordered_json::value_t::object: {
        if (v.empty()) {
            out << "{}";
            return;
        }
        out << "{\n";
        bool first = true;
        for (const auto& [key, item] : v.items()) {
            if (!first) {
                out << ",\n";
            }
            first = false;
            out << pad;
            write_string(out, key);
            out << ": ";
            write_value(out, item, depth + 1);
        }
        out << '\n' << close_pad << '}';
        return;
    }
    case nlohmann::ordered_json::value_t::array: {
        if (v.empty()) {
            out << "[]";
            return;
        }
        bool scalar_only = true;
        for (const auto& item : v) {
            if (item.is_structured()) {
                scalar_only = false;
                break;
            }
        }
        if (scalar_only) {
            out << '[';
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) {
                    out << ", ";
                }
                write_value(out, v[i], depth + 1);
            }
            out << ']';
            return;
        }
        out << "[\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) {
                out << ",\n";
            }
            out << pad;
            write_value(out, v[i], depth + 1);
        }
        out << '\n' << close_pad << ']';
        return;
    }
    case nlohmann::ordered_json::value_t::number_float:
        out << format_double(v.get<double>());
        return;
    case nlohmann::ordered_json::value_t::string:
        write_string(out, v.get_ref<const std::string&>());
        return;
    default:
        out << v.dump();
        return;
    }
}

}  // namespace

std::string format_double(double value) {
    if (!std::isfinite(value)) {
        return "null";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_json(std::ostream& out, const nlohmann::ordered_json& value) {
    write_value(out, value, 0);
    out << '\n';
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& value) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    write_json(out, value);
}

}  // namespace landscape
