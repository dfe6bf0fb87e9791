#include "omicsnet/errors.hpp"
#include "omicsnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace omicsnet {

namespace {

std::string padded(const char* prefix, std::size_t i, std::size_t width) {
    std::string digits = std::to_string(i);
    if (digits.size() < width) {
        digits.insert(0, width - digits.size(), '0');
    }
    return prefix + digits;
}

std::size_t digits_of(std::size_t n) {
    return std::to_string(n).size();
}

} // namespace

SyntheticCohort make_planted_cohort(const SyntheticCohortConfig& cfg) {
    if (cfg.n_classes < 2 || cfg.n_subjects < cfg.n_classes) {
        throw ConfigError("simulate: need at least 2 classes and one subject per class");
    }
    if (cfg.modalities.empty() || cfg.module_size == 0) {
        throw ConfigError("simulate: need at least one modality and a positive module size");
    }
    std::size_t total = 0;
    for (const auto& [name, width] : cfg.modalities) {
        if (width == 0) {
            throw ConfigError("simulate: modality '" + name + "' has no features");
        }
        total += width;
    }
    if (cfg.n_informative > total) {
        throw ConfigError("simulate: more informative features than features");
    }
    if (!(cfg.module_loading >= 0.0 && cfg.module_loading < 1.0)) {
        throw ConfigError("simulate: module_loading must lie in [0, 1)");
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> baseline(0.0, 3.0);

    const std::size_t n = cfg.n_subjects;
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i % cfg.n_classes;
    }
    std::shuffle(labels.begin(), labels.end(), rng);

    SyntheticCohort out;
    std::vector<std::string> ids, label_text;
    const std::size_t width = std::max<std::size_t>(3, digits_of(n));
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(padded("S", i + 1, width));
        label_text.push_back(padded("class_", labels[i] + 1, 1));
    }
    out.phenotype = PhenotypeVector::categorical(ids, label_text);

    // informative features are the leading columns of each modality, dealt round-robin
    const std::size_t m = cfg.modalities.size();
    std::vector<std::size_t> informative_per(m, 0);
    for (std::size_t t = 0; t < cfg.n_informative; ++t) {
        std::size_t k = t % m;
        while (informative_per[k] >= cfg.modalities[k].second) {
            k = (k + 1) % m;
        }
        ++informative_per[k];
    }

    const double noise_sd = std::sqrt(1.0 - cfg.module_loading * cfg.module_loading);
    std::size_t marker = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const auto& [name, f] = cfg.modalities[k];
        OmicsMatrix om;
        om.modality = name;
        om.subject_ids = ids;
        om.values = Matrix(n, f);
        const std::size_t fw = std::max<std::size_t>(2, digits_of(f));
        for (std::size_t j = 0; j < f; ++j) {
            om.feature_names.push_back(padded((name + "_").c_str(), j + 1, fw));
        }
        const std::size_t n_modules = (f + cfg.module_size - 1) / cfg.module_size;
        Matrix latent(n, n_modules);
        for (double& v : latent.data()) {
            v = normal(rng);
        }
        for (std::size_t j = 0; j < f; ++j) {
            const double base = baseline(rng);
            const bool informative = j < informative_per[k];
            const std::size_t marked = informative ? marker++ % cfg.n_classes : 0;
            if (informative) {
                out.informative.push_back(name + ":" + om.feature_names[j]);
            }
            for (std::size_t i = 0; i < n; ++i) {
                double v = base + cfg.module_loading * latent(i, j / cfg.module_size) + noise_sd * normal(rng);
                if (informative && labels[i] == marked) {
                    v += cfg.effect;
                }
                om.values(i, j) = v;
            }
        }
        out.modalities.push_back(std::move(om));
    }
    return out;
}

PhenotypeVector shuffled_labels(const PhenotypeVector& y, std::uint64_t seed) {
    PhenotypeVector out = y;
    std::mt19937_64 rng(seed);
    std::shuffle(out.values.begin(), out.values.end(), rng);
    return out;
}

} // namespace omicsnet
