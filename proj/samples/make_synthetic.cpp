// Writes a synthetic heart-disease CSV with the standard 12-column header.
//
//   make_synthetic OUT.csv [N=400] [POSITIVE_FRACTION=0.5] [SEED=7]

#include <iostream>
#include <string>

#include "heartml/heartml.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_synthetic OUT.csv [N] [POSITIVE_FRACTION] [SEED]\n";
    return 4;
  }
  try {
    const std::size_t n = argc > 2 ? std::stoul(argv[2]) : 400;
    const double fraction = argc > 3 ? std::stod(argv[3]) : 0.5;
    const std::uint64_t seed = argc > 4 ? std::stoull(argv[4]) : 7;
    const auto data = heartml::synth_generate(n, fraction, seed);
    heartml::write_file_atomic(argv[1], heartml::to_csv(data));
    std::cout << "wrote " << data.size() << " rows (" << data.positives() << " positive) to " << argv[1] << "\n";
  } catch (const heartml::Error& e) {
    std::cerr << heartml::format_error_line(e) << "\n";
    return heartml::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
