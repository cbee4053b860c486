/* The public header must compile as plain C and link from a C program. */
#include <gemix/gemix.h>

#include <math.h>
#include <stdio.h>

int main(void) {
  gemix_rng* rng = NULL;
  double theta[3];
  double label[3];
  double loss = 0.0;
  const double p[3] = {0.5, 0.25, 0.25};

  if (gemix_rng_new(1, &rng) != GEMIX_OK) return 1;
  if (gemix_build_concentration(0, 3, 2.0, 1.0, theta) != GEMIX_OK) return 1;
  if (gemix_sample_soft_label(rng, theta, 3, label) != GEMIX_OK) return 1;
  gemix_rng_free(rng);
  if (fabs(label[0] + label[1] + label[2] - 1.0) > 1e-6) return 1;
  if (gemix_soft_cross_entropy(p, p, 3, &loss) != GEMIX_OK) return 1;
  if (fabs(loss - 1.03972) > 1e-4) return 1;
  if (gemix_rng_new(1, NULL) != GEMIX_ERR_INVALID_ARGUMENT) return 1;
  printf("gemix %s from C: ok\n", gemix_version());
  return 0;
}
