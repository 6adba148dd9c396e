#include "procwarm/param_store.hpp"

namespace procwarm::model {

const char* to_string(Stage s) { return s == Stage::Warmup ? "warmup" : "vision"; }

Stage stage_from_string(const std::string& name) {
    if (name == "warmup") return Stage::Warmup;
    if (name == "vision") return Stage::Vision;
    throw ValidationError("unknown stage: " + name + " (expected warmup|vision)");
}

}  // namespace procwarm::model
