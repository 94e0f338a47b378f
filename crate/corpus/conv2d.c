/* 2-D convolution with a 3x3 stencil of runtime coefficients. */

double img[32][32];
double out[32][32];
double c11;
double c12;
double c13;
double c21;
double c22;
double c23;
double c31;
double c32;
double c33;
int n = 32;

int main() {
    int i;
    int j;
    double cs;

    c11 = 0.2;
    c12 = -0.3;
    c13 = 0.4;
    c21 = -0.5;
    c22 = 0.6;
    c23 = -0.7;
    c31 = 0.8;
    c32 = -0.9;
    c33 = 0.1;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            img[i][j] = ((i * 7 + j * 3) % 11) * 0.5 - 2.0;
            out[i][j] = 0.0;
        }
    }

    #pragma omp parallel for private(j) schedule(dynamic, 2)
    for (i = 1; i < n - 1; i++) {
        for (j = 1; j < n - 1; j++) {
            out[i][j] = c11 * img[i - 1][j - 1] + c12 * img[i][j - 1] + c13 * img[i + 1][j - 1]
                + c21 * img[i - 1][j] + c22 * img[i][j] + c23 * img[i + 1][j]
                + c31 * img[i - 1][j + 1] + c32 * img[i][j + 1] + c33 * img[i + 1][j + 1];
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + out[i][j] * ((i + 3 * j) % 5 + 1);
        }
    }
    printf("conv2d checksum %f\n", cs);
    printf("probe %f %f\n", out[1][1], out[30][30]);
    return 0;
}
