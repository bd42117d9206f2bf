#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqchart/violation.hpp"

namespace seqchart {

// Activity tree: curriculum -> course -> section -> lesson -> topic -> item.
// Items are leaves and carry an ordered list of content units.

enum class UnitKind { Asset, AssessmentAsset };

/// Hierarchy levels, outermost first. Children must have a strictly greater level.
enum class Level : std::uint8_t { Curriculum = 0, Course, Section, Lesson, Topic, Item };

inline constexpr double kDefaultMasteryScore = 0.5;

std::string_view to_string(Level level);
std::string_view to_string(UnitKind kind);
std::optional<Level> parse_level(std::string_view text);

struct ContentUnit {
  std::string id;
  UnitKind kind = UnitKind::Asset;
  std::string payload_ref;
  std::optional<double> mastery_score;     // AssessmentAsset only
  std::optional<std::int64_t> time_limit;  // ticks, AssessmentAsset only

  double effective_mastery() const { return mastery_score.value_or(kDefaultMasteryScore); }
  bool operator==(const ContentUnit&) const = default;
};

/// A node of the activity tree. Clusters use `children`, items (level == Item) use `units`.
struct ActivityNode {
  std::string id;
  Level level = Level::Item;
  std::vector<ActivityNode> children;
  std::vector<ContentUnit> units;

  bool is_item() const { return level == Level::Item; }
  bool operator==(const ActivityNode&) const = default;

  static ActivityNode item(std::string id, std::vector<ContentUnit> units = {});
  static ActivityNode cluster(std::string id, Level level, std::vector<ActivityNode> children);
};

class ActivityTree {
 public:
  ActivityTree() = default;
  explicit ActivityTree(ActivityNode root);

  const ActivityNode& root() const { return root_; }

  /// Looks up a cluster or item by id; nullptr when absent.
  const ActivityNode* find(std::string_view id) const;
  /// Looks up a content unit by id; nullptr when absent.
  const ContentUnit* find_unit(std::string_view id) const;
  /// Parent node of a cluster/item id (nullptr for the root or unknown ids).
  const ActivityNode* parent_of(std::string_view id) const;

  /// Items in document order.
  std::vector<const ActivityNode*> items() const;
  /// Every node (clusters and items) in document pre-order.
  std::vector<const ActivityNode*> nodes() const;

  bool operator==(const ActivityTree& other) const { return root_ == other.root_; }

 private:
  using Path = std::vector<std::size_t>;
  const ActivityNode* resolve(const Path& path) const;
  void build_index();

  ActivityNode root_;
  std::unordered_map<std::string, Path> node_index_;
  std::unordered_map<std::string, std::pair<Path, std::size_t>> unit_index_;
};

/// Base of the manifest parse errors. `node_id` is empty for syntax errors.
class ManifestError : public std::runtime_error {
 public:
  ManifestError(std::string node_id, const std::string& what)
      : std::runtime_error(what), node_id_(std::move(node_id)) {}
  const std::string& node_id() const { return node_id_; }

 private:
  std::string node_id_;
};

class SyntaxError : public ManifestError {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class SchemaError : public ManifestError {
 public:
  using ManifestError::ManifestError;
};

class ModelError : public ManifestError {
 public:
  ModelError(std::string node_id, std::string rule, const std::string& what)
      : ManifestError(std::move(node_id), what), rule_(std::move(rule)) {}
  const std::string& rule() const { return rule_; }

 private:
  std::string rule_;
};

ActivityTree parse_manifest(std::string_view document);
std::vector<Violation> validate_tree(const ActivityTree& tree);

/// Canonical manifest text (pretty-printed, stable key order).
std::string serialize_manifest(const ActivityTree& tree);

}  // namespace seqchart
