// Serves the minilang adapter over the external-adapter line protocol on
// stdin/stdout. Used to exercise ExternalAdapter end to end.

#include <iostream>

#include "apraudit/external_adapter.h"
#include "apraudit/minilang.h"

int main() {
  std::ios::sync_with_stdio(false);
  apraudit::minilang::MiniLangAdapter adapter;
  apraudit::ServeAdapter(adapter, std::cin, std::cout);
  return 0;
}
