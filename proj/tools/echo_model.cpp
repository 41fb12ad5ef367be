// Toy black-box model for the subprocess adapter: reads theta lines from
// stdin and answers with the quartic log density, one line per request.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

int main() {
  std::string line;
  while (std::getline(std::cin, line)) {
    std::istringstream in(line);
    double x1 = 0.0, x2 = 0.0;
    in >> x1 >> x2;
    const double a = 2.0 * x2 - x1 * x1;
    std::printf("%.17g\n", -std::pow(x1, 4) - 0.5 * a * a);
    std::fflush(stdout);
  }
  return 0;
}
