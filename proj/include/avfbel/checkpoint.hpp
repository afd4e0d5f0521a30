#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/tensor.hpp"

// Structured-text checkpoint shared by every module: a versioned header, one
// shape line plus one value line per named tensor, and an explicit trailer.
// Values are written with 17 significant digits so reloads are bit-exact.
namespace avfbel::ckpt {

inline constexpr const char* kHeader = "avfbel-checkpoint 1";

inline std::string serialize(const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::ostringstream out;
    out << kHeader << '\n';
    for (const auto& [name, tensor] : tensors) {
        out << "tensor " << name << ' ' << tensor->rank();
        for (std::size_t d : tensor->shape()) out << ' ' << d;
        out << '\n';
        char buf[32];
        for (std::size_t i = 0; i < tensor->size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", (*tensor)[i]);
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
    out << "end\n";
    return out.str();
}

inline std::map<std::string, Tensor> parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw ValidationError("checkpoint: missing or unsupported header");
    std::map<std::string, Tensor> tensors;
    while (std::getline(in, line)) {
        if (line == "end") return tensors;
        std::istringstream header(line);
        std::string keyword, name;
        std::size_t rank = 0;
        if (!(header >> keyword >> name >> rank) || keyword != "tensor")
            throw ValidationError("checkpoint: malformed tensor header: " + line);
        std::vector<std::size_t> shape(rank);
        for (std::size_t& d : shape)
            if (!(header >> d)) throw ValidationError("checkpoint: truncated shape for " + name);
        std::size_t count = 1;
        for (std::size_t d : shape) count *= d;
        if (!std::getline(in, line))
            throw ValidationError("checkpoint: missing values for " + name);
        std::istringstream values(line);
        std::vector<double> data(count);
        for (double& v : data)
            if (!(values >> v)) throw ValidationError("checkpoint: truncated values for " + name);
        if (!tensors.emplace(name, Tensor(shape, std::move(data))).second)
            throw ValidationError("checkpoint: duplicate tensor " + name);
    }
    throw ValidationError("checkpoint: missing end marker");
}

inline const Tensor& require(const std::map<std::string, Tensor>& tensors,
                             const std::string& name) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw ValidationError("checkpoint: tensor '" + name + "' not found");
    return it->second;
}

} // namespace avfbel::ckpt
