#pragma once

#include <string>
#include <vector>

#include "taskframe/json_util.hpp"
#include "taskframe/pipeline.hpp"
#include "taskframe/trajectory.hpp"

namespace taskframe {

struct DeriveConfig {
  PreprocessConfig preprocess;
  PipelineConfig pipeline;
  size_t samples = 100;
  double spline_lambda = 0.0;
  bool gravity_compensated = true;

  static DeriveConfig FromJson(const Json& j);  // strict: unknown keys rejected
  Json ToJson() const;
};

// Task frame parameters plus averaged references on the xi_bar grid.
struct TaskModel {
  TaskFrame frame;
  ReferenceSignals ref;
  Json provenance = Json::object();

  Json ToJson() const;
  static TaskModel FromJson(const Json& j);
};

struct DeriveResult {
  TrialBatch batch;
  TaskFrame frame;
  TaskModel model;
};

// Preprocessing, task-frame derivation, re-expression, reparameterization
// and trial averaging.
DeriveResult RunDerive(const std::vector<DemoTrial>& demos, const DeriveConfig& cfg);

// Full audit of the decisions: all candidates, determinants and ratios.
Json TaskFrameReport(const TaskFrame& frame);
Json TaskFrameToJson(const TaskFrame& frame);
TaskFrame TaskFrameFromJson(const Json& j);

}  // namespace taskframe
