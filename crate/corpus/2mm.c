/* Two chained matrix multiplies: tmp = alpha*A*B, then D = beta*D + tmp*C. */

double A[20][20];
double B[20][20];
double C[20][20];
double D[20][20];
double tmp[20][20];
double alpha;
double beta;
int n = 20;

int main() {
    int i;
    int j;
    int k;
    double cs;

    alpha = 0.75;
    beta = 1.25;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            A[i][j] = ((i * 3 + j) % 6) * 0.5;
            B[i][j] = ((i + j * 2) % 5) * 0.25;
            C[i][j] = ((i * 2 + j) % 4) * 0.75;
            D[i][j] = ((i + j) % 3) * 1.5;
        }
    }

    #pragma omp parallel for private(j, k) schedule(dynamic, 2)
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            tmp[i][j] = 0.0;
            for (k = 0; k < n; k++) {
                tmp[i][j] = tmp[i][j] + alpha * A[i][k] * B[k][j];
            }
        }
    }

    #pragma omp parallel for private(j, k) schedule(static)
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            D[i][j] = D[i][j] * beta;
            for (k = 0; k < n; k++) {
                D[i][j] = D[i][j] + tmp[i][k] * C[k][j];
            }
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + D[i][j] * ((2 * i + j) % 7 + 1);
        }
    }
    printf("2mm checksum %f\n", cs);
    printf("corner %f %f\n", D[0][0], D[19][19]);
    return 0;
}
