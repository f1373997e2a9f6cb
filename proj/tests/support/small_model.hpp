#pragma once

#include "glucoguard/datagen.hpp"
#include "glucoguard/detector.hpp"

namespace glucoguard::testing {

/// A 30-tree forest on 4000 generated samples; built once per process.
inline const detector::RandomForest& small_model() {
    static const detector::RandomForest forest = [] {
        datagen::GeneratorConfig g;
        g.n_samples = 4000;
        g.seed = 42;
        const auto samples = datagen::generate_dataset(g);
        detector::ForestConfig c;
        c.n_trees = 30;
        return detector::fit_forest(detector::Dataset::from_samples(samples), c, 0, 0);
    }();
    return forest;
}

}  // namespace glucoguard::testing
