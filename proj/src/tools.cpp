#include "caprl/synth/tools.hpp"

#include <functional>
#include <map>
#include <optional>

#include "caprl/common.hpp"

namespace caprl::synth {
namespace {

using nlohmann::json;

ToolResult err(std::string msg) { return {false, std::move(msg)}; }
ToolResult ok(std::string msg) { return {true, std::move(msg)}; }

std::optional<std::string> arg_str(const json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args[key].is_string()) return std::nullopt;
  return args[key].get<std::string>();
}

std::optional<bool> arg_bool(const json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args[key].is_boolean()) return std::nullopt;
  return args[key].get<bool>();
}

ToolResult bad_args(const std::string& tool, const std::string& key) {
  return err("Error: missing or invalid argument '" + key + "' for tool '" + tool + "'.");
}

json* section(json& db, const char* key) {
  if (!db.is_object() || !db.contains(key)) return nullptr;
  return &db[key];
}

// --- airline ---------------------------------------------------------------

// Reservations are stored per user; look one up by id across all users.
json* find_reservation(json& db, const std::string& rid) {
  json* users = section(db, "users");
  if (!users) return nullptr;
  for (auto& [uid, user] : users->items()) {
    if (user.contains("reservations") && user["reservations"].contains(rid)) {
      return &user["reservations"][rid];
    }
  }
  return nullptr;
}

ToolResult tool_get_user_details(const json& args, json& db) {
  auto uid = arg_str(args, "user_id");
  if (!uid) return bad_args("get_user_details", "user_id");
  json* users = section(db, "users");
  if (!users || !users->contains(*uid)) return err("Error: user '" + *uid + "' not found.");
  return ok((*users)[*uid].dump());
}

ToolResult tool_get_reservation_details(const json& args, json& db) {
  auto rid = arg_str(args, "reservation_id");
  if (!rid) return bad_args("get_reservation_details", "reservation_id");
  json* res = find_reservation(db, *rid);
  if (!res) return err("Error: reservation '" + *rid + "' not found.");
  return ok(res->dump());
}

ToolResult tool_list_flights(const json&, json& db) {
  json* flights = section(db, "flights");
  if (!flights) return err("Error: no flight data available.");
  return ok(flights->dump());
}

ToolResult tool_get_flight_details(const json& args, json& db) {
  auto f = arg_str(args, "flight");
  if (!f) return bad_args("get_flight_details", "flight");
  json* flights = section(db, "flights");
  if (!flights || !flights->contains(*f)) return err("Error: flight '" + *f + "' not found.");
  return ok((*flights)[*f].dump());
}

ToolResult tool_cancel_reservation(const json& args, json& db) {
  auto rid = arg_str(args, "reservation_id");
  if (!rid) return bad_args("cancel_reservation", "reservation_id");
  json* res = find_reservation(db, *rid);
  if (!res) return err("Error: reservation '" + *rid + "' not found.");
  (*res)["status"] = "cancelled";
  return ok("OK: reservation " + *rid + " cancelled.");
}

ToolResult tool_update_reservation_cabin(const json& args, json& db) {
  auto rid = arg_str(args, "reservation_id");
  if (!rid) return bad_args("update_reservation_cabin", "reservation_id");
  auto cabin = arg_str(args, "cabin");
  if (!cabin) return bad_args("update_reservation_cabin", "cabin");
  json* res = find_reservation(db, *rid);
  if (!res) return err("Error: reservation '" + *rid + "' not found.");
  json* flights = section(db, "flights");
  const std::string fnum = (*res)["flight"].get<std::string>();
  if (!flights || !flights->contains(fnum) || !(*flights)[fnum]["prices"].contains(*cabin)) {
    return err("Error: cabin '" + *cabin + "' not offered on flight " + fnum + ".");
  }
  (*res)["cabin"] = *cabin;
  return ok("OK: reservation " + *rid + " cabin set to " + *cabin + ".");
}

// --- retail ----------------------------------------------------------------

json* find_order(json& db, const std::string& oid) {
  json* users = section(db, "users");
  if (!users) return nullptr;
  for (auto& [uid, user] : users->items()) {
    if (user.contains("orders") && user["orders"].contains(oid)) return &user["orders"][oid];
  }
  return nullptr;
}

ToolResult tool_get_order_details(const json& args, json& db) {
  auto oid = arg_str(args, "order_id");
  if (!oid) return bad_args("get_order_details", "order_id");
  json* order = find_order(db, *oid);
  if (!order) return err("Error: order '" + *oid + "' not found.");
  return ok(order->dump());
}

ToolResult tool_list_products(const json&, json& db) {
  json* products = section(db, "products");
  if (!products) return err("Error: no product catalog available.");
  return ok(products->dump());
}

ToolResult tool_get_product_details(const json& args, json& db) {
  auto pid = arg_str(args, "product_id");
  if (!pid) return bad_args("get_product_details", "product_id");
  json* products = section(db, "products");
  if (!products || !products->contains(*pid)) {
    return err("Error: product '" + *pid + "' not found.");
  }
  return ok((*products)[*pid].dump());
}

ToolResult tool_cancel_order(const json& args, json& db) {
  auto oid = arg_str(args, "order_id");
  if (!oid) return bad_args("cancel_order", "order_id");
  json* order = find_order(db, *oid);
  if (!order) return err("Error: order '" + *oid + "' not found.");
  (*order)["status"] = "cancelled";
  return ok("OK: order " + *oid + " cancelled.");
}

ToolResult tool_return_order_item(const json& args, json& db) {
  auto oid = arg_str(args, "order_id");
  if (!oid) return bad_args("return_order_item", "order_id");
  auto item = arg_str(args, "item_id");
  if (!item) return bad_args("return_order_item", "item_id");
  json* order = find_order(db, *oid);
  if (!order) return err("Error: order '" + *oid + "' not found.");
  bool present = false;
  for (const auto& it : (*order)["items"]) present = present || it.get<std::string>() == *item;
  if (!present) return err("Error: item '" + *item + "' is not part of order " + *oid + ".");
  for (const auto& it : (*order)["returned"]) {
    if (it.get<std::string>() == *item) {
      return err("Error: item '" + *item + "' was already returned.");
    }
  }
  (*order)["returned"].push_back(*item);
  return ok("OK: return started for item " + *item + " from order " + *oid + ".");
}

ToolResult tool_update_order_address(const json& args, json& db) {
  auto oid = arg_str(args, "order_id");
  if (!oid) return bad_args("update_order_address", "order_id");
  auto addr = arg_str(args, "address");
  if (!addr) return bad_args("update_order_address", "address");
  json* order = find_order(db, *oid);
  if (!order) return err("Error: order '" + *oid + "' not found.");
  (*order)["address"] = *addr;
  return ok("OK: order " + *oid + " ships to " + *addr + ".");
}

// --- device ----------------------------------------------------------------

json* settings(json& db) { return section(db, "settings"); }

ToolResult status_line(const char* what, bool on) {
  return ok(std::string(what) + " is " + (on ? "on" : "off"));
}

ToolResult tool_get_wifi_status(const json&, json& db) {
  json* s = settings(db);
  if (!s) return err("Error: no device settings available.");
  return status_line("wifi", (*s)["wifi"].get<bool>());
}

ToolResult tool_get_cellular_status(const json&, json& db) {
  json* s = settings(db);
  if (!s) return err("Error: no device settings available.");
  return status_line("cellular", (*s)["cellular"].get<bool>());
}

ToolResult tool_get_low_battery_status(const json&, json& db) {
  json* s = settings(db);
  if (!s) return err("Error: no device settings available.");
  return status_line("low battery mode", (*s)["low_battery"].get<bool>());
}

// Radios cannot be switched on while low battery mode is active; switching
// them off is always allowed.
ToolResult set_radio(const char* key, const char* label, const json& args, json& db,
                     const std::string& tool) {
  auto on = arg_bool(args, "on");
  if (!on) return bad_args(tool, "on");
  json* s = settings(db);
  if (!s) return err("Error: no device settings available.");
  if (*on && (*s)["low_battery"].get<bool>()) {
    return err(std::string("PermissionError: ") + label +
               " cannot be turned on in low battery mode");
  }
  (*s)[key] = *on;
  return ok(std::string("OK: ") + key + " is now " + (*on ? "on" : "off") + ".");
}

ToolResult tool_set_wifi_status(const json& args, json& db) {
  return set_radio("wifi", "Wifi", args, db, "set_wifi_status");
}

ToolResult tool_set_cellular_status(const json& args, json& db) {
  return set_radio("cellular", "Cellular", args, db, "set_cellular_status");
}

ToolResult tool_set_low_battery_status(const json& args, json& db) {
  auto on = arg_bool(args, "on");
  if (!on) return bad_args("set_low_battery_mode_status", "on");
  json* s = settings(db);
  if (!s) return err("Error: no device settings available.");
  (*s)["low_battery"] = *on;
  return ok(std::string("OK: low battery mode is now ") + (*on ? "on" : "off") + ".");
}

ToolResult tool_search_contacts(const json& args, json& db) {
  auto name = arg_str(args, "name");
  if (!name) return bad_args("search_contacts", "name");
  json* contacts = section(db, "contacts");
  if (!contacts) return err("Error: no contacts available.");
  json matches = json::object();
  for (auto& [cname, entry] : contacts->items()) {
    if (contains_normalized(cname, *name)) matches[cname] = entry;
  }
  if (matches.empty()) return err("Error: no contact matching '" + *name + "'.");
  return ok(matches.dump());
}

ToolResult tool_add_reminder(const json& args, json& db) {
  auto text = arg_str(args, "text");
  if (!text) return bad_args("add_reminder", "text");
  if (!db.is_object() || !db.contains("reminders")) {
    return err("Error: no reminder list available.");
  }
  db["reminders"].push_back(*text);
  return ok("OK: reminder added.");
}

using ToolFn = std::function<ToolResult(const json&, json&)>;

const std::map<std::string, ToolFn>& tool_table() {
  static const std::map<std::string, ToolFn> table = {
      {"get_user_details", tool_get_user_details},
      {"get_reservation_details", tool_get_reservation_details},
      {"list_flights", tool_list_flights},
      {"get_flight_details", tool_get_flight_details},
      {"cancel_reservation", tool_cancel_reservation},
      {"update_reservation_cabin", tool_update_reservation_cabin},
      {"get_order_details", tool_get_order_details},
      {"list_products", tool_list_products},
      {"get_product_details", tool_get_product_details},
      {"cancel_order", tool_cancel_order},
      {"return_order_item", tool_return_order_item},
      {"update_order_address", tool_update_order_address},
      {"get_wifi_status", tool_get_wifi_status},
      {"set_wifi_status", tool_set_wifi_status},
      {"get_cellular_status", tool_get_cellular_status},
      {"set_cellular_status", tool_set_cellular_status},
      {"get_low_battery_mode_status", tool_get_low_battery_status},
      {"set_low_battery_mode_status", tool_set_low_battery_status},
      {"search_contacts", tool_search_contacts},
      {"add_reminder", tool_add_reminder},
  };
  return table;
}

}  // namespace

ToolResult execute_tool(const std::string& name, const nlohmann::json& args, nlohmann::json& db) {
  const auto& table = tool_table();
  auto it = table.find(name);
  if (it == table.end()) return err("Error: unknown tool '" + name + "'.");
  return it->second(args, db);
}

std::vector<std::string> known_tools() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : tool_table()) names.push_back(name);
  return names;
}

}  // namespace caprl::synth
