/* Jacobi 2-D relaxation: alternating sweeps over two grids under a
 * sequential time loop. */

double A[28][28];
double B[28][28];
int n = 28;
int tsteps = 4;

int main() {
    int t;
    int i;
    int j;
    double cs;

    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            A[i][j] = (i * (j + 2) + 2.0) / n;
            B[i][j] = (i * (j + 3) + 3.0) / n;
        }
    }

    for (t = 0; t < tsteps; t++) {
        #pragma omp parallel for private(j)
        for (i = 1; i < n - 1; i++) {
            for (j = 1; j < n - 1; j++) {
                B[i][j] = 0.2 * (A[i][j] + A[i][j - 1] + A[i][j + 1] + A[i + 1][j] + A[i - 1][j]);
            }
        }
        #pragma omp parallel for private(j)
        for (i = 1; i < n - 1; i++) {
            for (j = 1; j < n - 1; j++) {
                A[i][j] = B[i][j];
            }
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + A[i][j] * ((i * 2 + j) % 6 + 1);
        }
    }
    printf("jacobi-2d checksum %f\n", cs);
    printf("center %f\n", A[14][14]);
    return 0;
}
