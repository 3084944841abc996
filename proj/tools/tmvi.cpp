#include "tmvi/experiments.hpp"

int main(int argc, char** argv) {
  return tmvi::parse_and_dispatch(argc, argv);
}
