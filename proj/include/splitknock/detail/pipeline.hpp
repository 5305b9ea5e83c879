#pragma once

// Internal entry points of the filter pipeline. Not part of the public API.

#include "splitknock/filter.hpp"

namespace splitknock::detail {

struct PipelineHooks {
  // Replace y on the copy half by zeros before building the augmented
  // design, which forces zeta = 0 and therefore Z~ = Z.
  bool zero_copy_response = false;
};

// Runs the pipeline on an explicit (path half, copy half) pair.
SelectionResult run_on_halves(const Dataset& half1, const Dataset& half2, const Matrix& d,
                              const SplitConfig& config, const PipelineHooks& hooks = {});

SelectionResult run_split_knockoff(const Dataset& data, const LinearTransform& transform,
                                   const SplitConfig& config, const PipelineHooks& hooks);

SelectionResult run_no_split(const Dataset& data, const LinearTransform& transform,
                             const SplitConfig& config, const PipelineHooks& hooks);

// The split used by run_split_knockoff for this config.
DataSplit make_split(Index n, const SplitConfig& config);

}  // namespace splitknock::detail
