#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "ledgerscope/common.hpp"

int main(int argc, char** argv) {
  ledgerscope::set_quiet(true);
  doctest::Context context(argc, argv);
  return context.run();
}
