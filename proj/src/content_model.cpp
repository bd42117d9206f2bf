#include "seqchart/content_model.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace seqchart {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kLevelNames = {"curriculum", "course", "section",
                                                         "lesson",     "topic",  "item"};

std::string describe(const json& value) {
  if (value.is_object() && value.contains("id") && value["id"].is_string()) {
    return value["id"].get<std::string>();
  }
  return {};
}

void require_keys(const json& object, std::initializer_list<std::string_view> allowed,
                  std::initializer_list<std::string_view> required, const std::string& where) {
  for (const auto& [key, _] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(where, "unknown field '" + key + "' in " + (where.empty() ? "node" : where));
    }
  }
  for (auto key : required) {
    if (!object.contains(key)) {
      throw SchemaError(where, "missing required field '" + std::string(key) + "' in " +
                                   (where.empty() ? "node" : where));
    }
  }
}

std::string string_field(const json& object, std::string_view key, const std::string& where) {
  const auto& value = object.at(std::string(key));
  if (!value.is_string()) {
    throw SchemaError(where, "field '" + std::string(key) + "' must be a string in " + where);
  }
  return value.get<std::string>();
}

ContentUnit parse_unit(const json& value, const std::string& owner) {
  if (!value.is_object()) throw SchemaError(owner, "unit entries of " + owner + " must be objects");
  std::string where = describe(value);
  if (where.empty()) where = owner;
  require_keys(value, {"id", "kind", "payload_ref", "mastery_score", "time_limit"},
               {"id", "kind", "payload_ref"}, where);
  ContentUnit unit;
  unit.id = string_field(value, "id", where);
  const std::string kind = string_field(value, "kind", where);
  if (kind == "asset") {
    unit.kind = UnitKind::Asset;
  } else if (kind == "assessment") {
    unit.kind = UnitKind::AssessmentAsset;
  } else {
    throw SchemaError(where, "unit " + where + " has unknown kind '" + kind + "'");
  }
  unit.payload_ref = string_field(value, "payload_ref", where);
  if (value.contains("mastery_score")) {
    const auto& score = value["mastery_score"];
    if (!score.is_number()) throw SchemaError(where, "mastery_score of " + where + " must be a number");
    unit.mastery_score = score.get<double>();
  }
  if (value.contains("time_limit")) {
    const auto& limit = value["time_limit"];
    if (!limit.is_number_integer()) {
      throw SchemaError(where, "time_limit of " + where + " must be an integer");
    }
    unit.time_limit = limit.get<std::int64_t>();
  }
  return unit;
}

ActivityNode parse_node(const json& value, const std::string& parent) {
  if (!value.is_object()) {
    throw SchemaError(parent, "children of " + (parent.empty() ? "manifest" : parent) +
                                  " must be objects");
  }
  std::string where = describe(value);
  if (where.empty()) where = parent;
  const bool looks_like_item = value.contains("units");
  const bool looks_like_cluster = value.contains("children") || value.contains("level");
  if (looks_like_item && looks_like_cluster) {
    throw SchemaError(where, "node " + where + " mixes 'units' with cluster fields");
  }
  if (!looks_like_item && !looks_like_cluster) {
    throw SchemaError(where, "missing required field 'children' or 'units' in " + where);
  }

  ActivityNode node;
  if (looks_like_item) {
    require_keys(value, {"id", "units"}, {"id", "units"}, where);
    node.id = string_field(value, "id", where);
    node.level = Level::Item;
    if (!value["units"].is_array()) throw SchemaError(where, "'units' of " + where + " must be an array");
    for (const auto& unit : value["units"]) node.units.push_back(parse_unit(unit, node.id));
    return node;
  }

  require_keys(value, {"id", "level", "children"}, {"id", "level", "children"}, where);
  node.id = string_field(value, "id", where);
  const std::string level_text = string_field(value, "level", where);
  auto level = parse_level(level_text);
  if (!level || *level == Level::Item) {
    throw SchemaError(where, "cluster " + where + " has unknown level '" + level_text + "'");
  }
  node.level = *level;
  if (!value["children"].is_array()) {
    throw SchemaError(where, "'children' of " + where + " must be an array");
  }
  for (const auto& child : value["children"]) node.children.push_back(parse_node(child, node.id));
  return node;
}

ordered_json to_json(const ContentUnit& unit) {
  ordered_json out;
  out["id"] = unit.id;
  out["kind"] = unit.kind == UnitKind::Asset ? "asset" : "assessment";
  out["payload_ref"] = unit.payload_ref;
  if (unit.mastery_score) out["mastery_score"] = *unit.mastery_score;
  if (unit.time_limit) out["time_limit"] = *unit.time_limit;
  return out;
}

ordered_json to_json(const ActivityNode& node) {
  ordered_json out;
  out["id"] = node.id;
  if (node.is_item()) {
    out["units"] = ordered_json::array();
    for (const auto& unit : node.units) out["units"].push_back(to_json(unit));
  } else {
    out["level"] = std::string(to_string(node.level));
    out["children"] = ordered_json::array();
    for (const auto& child : node.children) out["children"].push_back(to_json(child));
  }
  return out;
}

struct TreeChecker {
  std::vector<Violation> found;
  std::unordered_set<std::string> seen;

  void add(const std::string& id, std::string rule, std::string message) {
    found.push_back({id, std::move(rule), id + ": " + std::move(message)});
  }

  void check_id(const std::string& id) {
    if (id.empty()) {
      add(id, "empty-id", "identifier must be nonempty");
      return;
    }
    if (!seen.insert(id).second) add(id, "duplicate-id", "duplicate id");
  }

  void check_unit(const ContentUnit& unit) {
    check_id(unit.id);
    if (unit.kind == UnitKind::Asset) {
      if (unit.mastery_score) add(unit.id, "mastery-on-asset", "mastery_score on a plain asset");
      if (unit.time_limit) add(unit.id, "time-limit-on-asset", "time_limit on a plain asset");
      return;
    }
    if (unit.mastery_score && !(*unit.mastery_score >= 0.0 && *unit.mastery_score <= 1.0)) {
      add(unit.id, "mastery-range", "mastery_score outside [0,1]");
    }
    if (unit.time_limit && *unit.time_limit <= 0) {
      add(unit.id, "time-limit-positive", "time_limit must be a positive tick count");
    }
  }

  void check_node(const ActivityNode& node) {
    check_id(node.id);
    if (node.is_item()) {
      if (!node.children.empty()) add(node.id, "item-has-children", "item with child activities");
      for (const auto& unit : node.units) check_unit(unit);
      return;
    }
    if (!node.units.empty()) add(node.id, "cluster-has-units", "cluster carrying content units");
    if (node.children.empty()) add(node.id, "childless-cluster", "childless cluster");
    for (const auto& child : node.children) {
      if (child.level <= node.level) {
        add(child.id, "level-inversion",
            std::string(to_string(child.level)) + " nested inside " + std::string(to_string(node.level)) +
                " " + node.id);
      }
      check_node(child);
    }
  }
};

}  // namespace

std::string_view to_string(Level level) { return kLevelNames[static_cast<std::size_t>(level)]; }

std::string_view to_string(UnitKind kind) {
  return kind == UnitKind::Asset ? "asset" : "assessment";
}

std::optional<Level> parse_level(std::string_view text) {
  for (std::size_t i = 0; i < kLevelNames.size(); ++i) {
    if (kLevelNames[i] == text) return static_cast<Level>(i);
  }
  return std::nullopt;
}

ActivityNode ActivityNode::item(std::string id, std::vector<ContentUnit> units) {
  ActivityNode node;
  node.id = std::move(id);
  node.level = Level::Item;
  node.units = std::move(units);
  return node;
}

ActivityNode ActivityNode::cluster(std::string id, Level level, std::vector<ActivityNode> children) {
  ActivityNode node;
  node.id = std::move(id);
  node.level = level;
  node.children = std::move(children);
  return node;
}

SyntaxError::SyntaxError(std::size_t line, std::size_t column, const std::string& what)
    : ManifestError({}, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

ActivityTree::ActivityTree(ActivityNode root) : root_(std::move(root)) { build_index(); }

void ActivityTree::build_index() {
  node_index_.clear();
  unit_index_.clear();
  Path path;
  auto visit = [&](auto&& self, const ActivityNode& node) -> void {
    node_index_.try_emplace(node.id, path);
    for (std::size_t u = 0; u < node.units.size(); ++u) unit_index_.try_emplace(node.units[u].id, path, u);
    for (std::size_t c = 0; c < node.children.size(); ++c) {
      path.push_back(c);
      self(self, node.children[c]);
      path.pop_back();
    }
  };
  visit(visit, root_);
}

const ActivityNode* ActivityTree::resolve(const Path& path) const {
  const ActivityNode* node = &root_;
  for (auto index : path) node = &node->children[index];
  return node;
}

const ActivityNode* ActivityTree::find(std::string_view id) const {
  auto it = node_index_.find(std::string(id));
  return it == node_index_.end() ? nullptr : resolve(it->second);
}

const ContentUnit* ActivityTree::find_unit(std::string_view id) const {
  auto it = unit_index_.find(std::string(id));
  if (it == unit_index_.end()) return nullptr;
  return &resolve(it->second.first)->units[it->second.second];
}

const ActivityNode* ActivityTree::parent_of(std::string_view id) const {
  auto it = node_index_.find(std::string(id));
  if (it == node_index_.end() || it->second.empty()) return nullptr;
  Path parent(it->second.begin(), it->second.end() - 1);
  return resolve(parent);
}

std::vector<const ActivityNode*> ActivityTree::nodes() const {
  std::vector<const ActivityNode*> out;
  auto visit = [&](auto&& self, const ActivityNode& node) -> void {
    out.push_back(&node);
    for (const auto& child : node.children) self(self, child);
  };
  visit(visit, root_);
  return out;
}

std::vector<const ActivityNode*> ActivityTree::items() const {
  auto all = nodes();
  std::erase_if(all, [](const ActivityNode* node) { return !node->is_item(); });
  return all;
}

std::vector<Violation> validate_tree(const ActivityTree& tree) {
  TreeChecker checker;
  const auto& root = tree.root();
  if (root.level != Level::Curriculum) {
    checker.add(root.id, "root-level", "root must be a curriculum cluster");
  }
  checker.check_node(root);
  return std::move(checker.found);
}

ActivityTree parse_manifest(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, document.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (document[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string message = e.what();
    if (auto pos = message.find("parse error"); pos != std::string::npos) message = message.substr(pos);
    throw SyntaxError(line, column, message);
  }

  if (!doc.is_object()) throw SchemaError({}, "manifest must be an object with a 'curriculum' field");
  require_keys(doc, {"curriculum"}, {"curriculum"}, "manifest");
  ActivityTree tree(parse_node(doc["curriculum"], {}));

  auto violations = validate_tree(tree);
  if (!violations.empty()) {
    const auto& first = violations.front();
    throw ModelError(first.node_id, first.rule, first.message);
  }
  return tree;
}

std::string serialize_manifest(const ActivityTree& tree) {
  ordered_json doc;
  doc["curriculum"] = to_json(tree.root());
  return doc.dump(2) + "\n";
}

}  // namespace seqchart
