#include "apraudit/minilang.h"
#include "apraudit/scripted.h"
#include "apraudit/subject.h"

namespace apraudit {

void RegisterBuiltinAdapters(AdapterRegistry& registry) {
  registry.Register("minilang", std::make_shared<minilang::MiniLangAdapter>());
  registry.Register("scripted", std::make_shared<scripted::ScriptedAdapter>());
}

}  // namespace apraudit
