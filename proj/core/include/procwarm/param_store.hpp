#pragma once

#include "procwarm/errors.hpp"
#include "procwarm/model_config.hpp"
#include "procwarm/tensor.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace procwarm::model {

enum class Stage { Warmup, Vision };

const char* to_string(Stage s);
Stage stage_from_string(const std::string& name);

// Ordered named-tensor store. `order` is the manifest order and fixes the
// payload layout on disk; lookups go through the map. Frozen tensors are
// excluded from gradients and optimizer state.
template <typename T>
struct ParamStore {
    ModelConfig config;
    Stage stage = Stage::Warmup;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> order;
    std::map<std::string, Tensor<T>> tensors;
    std::set<std::string> frozen;

    bool operator==(const ParamStore&) const = default;

    bool has(const std::string& name) const { return tensors.count(name) != 0; }
    bool is_frozen(const std::string& name) const { return frozen.count(name) != 0; }

    Tensor<T>& add(const std::string& name, std::vector<std::int64_t> shape,
                   bool freeze = false) {
        if (has(name)) throw ValidationError("duplicate tensor name: " + name);
        order.push_back(name);
        if (freeze) frozen.insert(name);
        return tensors[name] = Tensor<T>(std::move(shape));
    }

    Tensor<T>& at(const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ValidationError("unknown tensor: " + name);
        return it->second;
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ValidationError("unknown tensor: " + name);
        return it->second;
    }

    void remove(const std::string& name) {
        if (!has(name)) throw ValidationError("unknown tensor: " + name);
        tensors.erase(name);
        frozen.erase(name);
        std::erase(order, name);
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        out.config = config;
        out.stage = stage;
        out.step = step;
        out.seed = seed;
        out.order = order;
        out.frozen = frozen;
        for (const auto& [name, t] : tensors) out.tensors[name] = t.template cast<U>();
        return out;
    }
};

// Checkpoints are stored in 32-bit floats; gradient tests cast to double.
using Checkpoint = ParamStore<float>;

}  // namespace procwarm::model
