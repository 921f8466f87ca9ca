#include "dhinf/demo.h"

namespace dhinf::demo {

UncertainPlant Plant() {
  MatrixXd E(3, 3), A(3, 3), Bw(3, 2), Bu(3, 1), C(1, 3), Dw(1, 2), MA(3, 1), NA(1, 3);
  E << 1, 0, 0,
       0, 0, 0,
       2, 0, 1;
  A << -0.25, 0, 0,
       -0.5, 0.5, 2,
       0.75, -1, -1.5;
  Bw << 0, 0,
        0.1, 0,
        0.2, 0.1;
  Bu << 0, 0, 1;
  C << 2, 2, 0;
  Dw << 0.01, -0.5;
  MA << 0.1, -0.1, 0.05;
  NA << 0, 0.1, 0.1;
  return UncertainPlant::Make(DescriptorPlant::Make(E, A, Bw, Bu, C, Dw), 1, MA, NA);
}

MatrixXd ReferenceGainK1() {
  MatrixXd K(1, 3);
  K << 0.2055, 1.0702, 1.4786;
  return K;
}

MatrixXd ReferenceGainK2() {
  MatrixXd K(1, 3);
  K << -0.4887, 1.8633, 4.4607;
  return K;
}

}  // namespace dhinf::demo
