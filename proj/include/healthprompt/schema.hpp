#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "healthprompt/error.hpp"

namespace healthprompt {

enum class FeatureKind { continuous, coded };

struct FeatureDescriptor {
    std::string name;         // column token, e.g. "cp"
    std::string description;  // attribute text shown to the model
    FeatureKind kind = FeatureKind::continuous;

    bool operator==(const FeatureDescriptor&) const = default;
};

// Ordered feature list of a tabular task. The heart-disease schema is the
// only one the pipeline ships, but tests build smaller ones.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureDescriptor> features) : features_(std::move(features)) {}

    std::size_t size() const noexcept { return features_.size(); }
    const std::vector<FeatureDescriptor>& features() const noexcept { return features_; }
    const FeatureDescriptor& operator[](std::size_t i) const { return features_.at(i); }

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < features_.size(); ++i) {
            if (features_[i].name == name) return i;
        }
        return std::nullopt;
    }

    std::size_t require_index(std::string_view name) const {
        if (auto i = index_of(name)) return *i;
        throw ValidationError("unknown feature '" + std::string(name) + "'");
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(features_.size());
        for (const auto& f : features_) out.push_back(f.name);
        return out;
    }

    bool operator==(const FeatureSchema&) const = default;

private:
    std::vector<FeatureDescriptor> features_;
};

inline constexpr std::size_t kHeartFeatureCount = 13;

// Canonical UCI heart-disease attributes. Labels are capitalised as the
// attribute-description block lists them.
inline const FeatureSchema& heart_schema() {
    static const FeatureSchema schema{{
        {"age", "Age: Age of the individual", FeatureKind::continuous},
        {"sex", "Sex: Sex of the individual (1 = Male, 0 = Female)", FeatureKind::coded},
        {"cp",
         "Cp: Chest pain type (1 = typical angina, 2 = atypical angina, 3 = non-anginal pain, "
         "4 = asymptomatic)",
         FeatureKind::coded},
        {"trestbps", "Trestbps: Resting blood pressure (in mm Hg on admission to the hospital)",
         FeatureKind::continuous},
        {"chol", "Chol: Serum cholesterol in mg/dl", FeatureKind::continuous},
        {"fbs", "Fbs: Fasting blood sugar > 120 mg/dl (1 = true, 0 = false)", FeatureKind::coded},
        {"restecg",
         "Restecg: Resting electrocardiographic results (0 = normal, 1 = having ST-T wave "
         "abnormality, 2 = showing probable or definite left ventricular hypertrophy)",
         FeatureKind::coded},
        {"thalach", "Thalach: Maximum heart rate achieved", FeatureKind::continuous},
        {"exang", "Exang: Exercise-induced angina (1 = yes, 0 = no)", FeatureKind::coded},
        {"oldpeak", "Oldpeak: ST depression induced by exercise relative to rest",
         FeatureKind::continuous},
        {"slope",
         "Slope: The slope of the peak exercise ST segment (1 = upsloping, 2 = flat, "
         "3 = downsloping)",
         FeatureKind::coded},
        {"ca", "Ca: Number of major vessels (0-3) colored by fluoroscopy", FeatureKind::coded},
        {"thal", "Thal: Thalassemia (3 = normal, 6 = fixed defect, 7 = reversible defect)",
         FeatureKind::coded},
    }};
    return schema;
}

inline constexpr std::string_view kTargetColumn = "num";

}  // namespace healthprompt
