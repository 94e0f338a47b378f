/* General matrix multiply-accumulate: C = beta*C + alpha*A*B. */

double A[24][24];
double B[24][24];
double C[24][24];
double alpha;
double beta;
int n = 24;

int main() {
    int i;
    int j;
    int k;
    double cs;

    alpha = 1.5;
    beta = 1.2;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            A[i][j] = ((i * j + 1) % 5) * 0.25;
            B[i][j] = ((i + j) % 7) * 0.5;
            C[i][j] = ((i + 2 * j) % 3) * 1.0;
        }
    }

    #pragma omp parallel for private(j, k) schedule(static)
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            C[i][j] = C[i][j] * beta;
            for (k = 0; k < n; k++) {
                C[i][j] = C[i][j] + alpha * A[i][k] * B[k][j];
            }
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + C[i][j] * ((i + 2 * j) % 9 + 1);
        }
    }
    printf("gemm checksum %f\n", cs);
    printf("corner %f %f\n", C[0][0], C[23][23]);
    return 0;
}
