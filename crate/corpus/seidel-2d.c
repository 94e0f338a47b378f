/* Gauss-Seidel 2-D sweep. Each row update reads rows the previous
 * iterations of the same sweep just wrote, so the annotated loop carries a
 * dependence and is expected to stay sequential (fallback). */

double g[24][24];
int n = 24;
int tsteps = 2;

int main() {
    int t;
    int i;
    int j;
    double cs;

    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            g[i][j] = (i * (j + 2) + 2.0) / n;
        }
    }

    for (t = 0; t < tsteps; t++) {
        #pragma omp parallel for private(j)
        for (i = 1; i < n - 1; i++) {
            for (j = 1; j < n - 1; j++) {
                g[i][j] = (g[i - 1][j] + g[i][j] + g[i + 1][j] + g[i][j - 1] + g[i][j + 1]) * 0.2;
            }
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + g[i][j] * ((i + 2 * j) % 5 + 1);
        }
    }
    printf("seidel-2d checksum %f\n", cs);
    printf("center %f\n", g[12][12]);
    return 0;
}
