#pragma once

#include <string>

namespace fogline {

/// The five component roles of the resource-management plane. Every pod
/// hosts exactly one.
enum class ComponentKind { Master, Actor, RemoteLogger, TaskExecutor, User };

const char* component_kind_name(ComponentKind k);
ComponentKind parse_component_kind(const std::string& text);

}  // namespace fogline
