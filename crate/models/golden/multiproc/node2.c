/* node2 */
#include <stdint.h>
#include <avr/io.h>
#include "blocks.h"
#include "com.h"
void comA_thread(void)
{
    switch (comA_next()) {
    }
}
int main(void)
{
    for (;;) {
    }
    return 0;
}
/* end of node2 */
