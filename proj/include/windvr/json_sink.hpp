#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "windvr/distill.hpp"

namespace windvr {

// Collects JSON-lines training metrics in memory and indexes them by
// (step, loss_name) for assertions over a finished run.
class JsonLinesLog {
public:
    distill::MetricsSink sink() {
        return [this](const std::string& line) { add(line); };
    }

    void add(const std::string& line) {
        lines_.push_back(line);
        auto j = nlohmann::json::parse(line);
        const double v = j.at("value").get<double>();
        if (!std::isfinite(v)) ++nonfinite_;
        byKey_[{j.at("step").get<std::size_t>(), j.at("loss_name").get<std::string>()}] = v;
    }

    double value(std::size_t step, const std::string& name) const {
        auto it = byKey_.find({step, name});
        if (it == byKey_.end())
            throw std::runtime_error("JsonLinesLog: no entry for step " + std::to_string(step) +
                                     " name " + name);
        return it->second;
    }

    bool has(std::size_t step, const std::string& name) const {
        return byKey_.count({step, name}) > 0;
    }

    std::size_t nonfinite_count() const { return nonfinite_; }
    const std::vector<std::string>& lines() const { return lines_; }

private:
    std::vector<std::string> lines_;
    std::map<std::pair<std::size_t, std::string>, double> byKey_;
    std::size_t nonfinite_ = 0;
};

} // namespace windvr
